"""Community-based OER recommendation for scholarly reading.

Groups readers into communities from profile and reading-behavior
features, trains one linear ranking model per community, and evaluates
OER recommendations offline on recorded or synthetic event logs.
"""

__version__ = "0.1.0"
