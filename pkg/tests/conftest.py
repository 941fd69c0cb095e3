"""Shared fixtures: a hand-analyzable toy corpus and a small typed graph."""

from __future__ import annotations

import json

import pytest

from oerrec.corpus import parse_corpus
from oerrec.hetgraph import HetGraph


def _jsonl(records):
    return [json.dumps(r) for r in records]


READER_RECORDS = [
    {"reader": "r1", "courses": ["cs101", "ml201"], "skills": {"prog": 4, "stats": 2}},
    {"reader": "r2", "courses": ["cs101"], "skills": {"prog": 1}},
]

# Locations: r1 quotes sit at the top of p1 page 0; r2 works at the bottom of
# p1 page 4; r3 comments on p2 page 1.  r3 has no profile record and is
# auto-registered from its events.
EVENT_RECORDS = [
    {"event": "e01", "kind": "quote", "reader": "r1", "paper": "p1", "page": 0,
     "bbox": [0.0, 0.0, 0.2, 0.1], "quote_text": "graph graph walk",
     "content_text": "", "target": None, "oer": None, "grade": None, "ts": 1},
    {"event": "e02", "kind": "quote", "reader": "r1", "paper": "p1", "page": 0,
     "bbox": [0.1, 0.05, 0.3, 0.15], "quote_text": "graph walk",
     "content_text": "", "target": None, "oer": None, "grade": None, "ts": 2},
    {"event": "e03", "kind": "quote", "reader": "r2", "paper": "p1", "page": 4,
     "bbox": [0.5, 0.8, 0.9, 0.95], "quote_text": "hash table index",
     "content_text": "", "target": None, "oer": None, "grade": None, "ts": 3},
    {"event": "e04", "kind": "question", "reader": "r2", "paper": "p1", "page": 4,
     "bbox": [0.5, 0.8, 0.9, 0.95], "quote_text": "hash table",
     "content_text": "why so sparse", "target": None, "oer": None,
     "grade": None, "ts": 4},
    {"event": "e05", "kind": "comment", "reader": "r3", "paper": "p2", "page": 1,
     "bbox": [0.2, 0.3, 0.4, 0.5], "quote_text": "neural net",
     "content_text": "nice figure neural", "target": None, "oer": None,
     "grade": None, "ts": 5},
    {"event": "e06", "kind": "reply", "reader": "r1", "paper": "p2", "page": 1,
     "bbox": [0.2, 0.3, 0.4, 0.5], "quote_text": "",
     "content_text": "thanks useful", "target": "e05", "oer": None,
     "grade": None, "ts": 6},
    {"event": "e07", "kind": "rating", "reader": "r2", "paper": "p1", "page": 4,
     "bbox": [0.5, 0.8, 0.9, 0.95], "quote_text": "", "content_text": "",
     "target": None, "oer": "v1", "grade": "Good", "ts": 7},
    {"event": "e08", "kind": "rating", "reader": "r2", "paper": "p1", "page": 4,
     "bbox": [0.5, 0.8, 0.9, 0.95], "quote_text": "", "content_text": "",
     "target": None, "oer": "c1", "grade": "Bad", "ts": 8},
    {"event": "e09", "kind": "rating", "reader": "r3", "paper": "p2", "page": 1,
     "bbox": [0.2, 0.3, 0.4, 0.5], "quote_text": "", "content_text": "",
     "target": None, "oer": "v1", "grade": "NotSure", "ts": 9},
]

OER_RECORDS = [
    {"oer": "v1", "type": "video", "title": "Hash tables explained",
     "body": "video lecture hash table chaining index"},
    {"oer": "s1", "type": "slides", "title": "Index structures",
     "body": "slides hash index btree"},
    {"oer": "c1", "type": "code", "title": "Graph walks",
     "body": "code graph walk random traversal"},
    {"oer": "w1", "type": "wiki", "title": "Neural networks",
     "body": "wiki neural net backpropagation"},
]

JUDGMENT_LINES = [
    "q1\tr2\tp1\thash table\tv1\tGood",
    "q1\tr2\tp1\thash table\tc1\tBad",
    "q1\tr2\tp1\thash table\ts1\tOK",
    "q2\tr1\tp1\tgraph walk\tw1\tNotSure",
    "q2\tr1\tp1\tgraph walk\tv1\tBad",
    "q3\tr3\tp2\tneural net\tv1\tOK",
    "q3\tr3\tp2\tneural net\tc1\tBad",
]


@pytest.fixture
def toy_streams():
    return {
        "readers": _jsonl(READER_RECORDS),
        "events": _jsonl(EVENT_RECORDS),
        "oers": _jsonl(OER_RECORDS),
        "judgments": list(JUDGMENT_LINES),
    }


@pytest.fixture
def toy_corpus(toy_streams):
    return parse_corpus(
        toy_streams["events"],
        toy_streams["readers"],
        toy_streams["oers"],
        toy_streams["judgments"],
    )


@pytest.fixture
def toy_graph():
    """Two papers, two topics, three OERs; p1 fans out, o3 is shared."""
    g = HetGraph()
    g.add_vertex("p1", "paper")
    g.add_vertex("p2", "paper")
    g.add_vertex("t1", "topic", "graphs")
    g.add_vertex("t2", "topic", "hashing")
    g.add_vertex("o1", "oer", "video")
    g.add_vertex("o2", "oer", "code")
    g.add_vertex("o3", "oer", "video")
    g.add_edge("p1", "about", "t1")
    g.add_edge("p1", "about", "t2")
    g.add_edge("p2", "about", "t2")
    g.add_edge("t1", "covers", "p1")
    g.add_edge("t2", "covers", "p1")
    g.add_edge("t2", "covers", "p2")
    g.add_edge("t1", "related", "o1")
    g.add_edge("t1", "related", "o2")
    g.add_edge("t2", "related", "o3")
    g.add_edge("t2", "related", "o2")
    g.add_edge("p1", "resource", "o1")
    g.add_edge("p2", "resource", "o3")
    return g


def graph_as_dicts(g: HetGraph):
    """Plain-dict view of a HetGraph for the tour-enumeration oracle."""
    adj = {key: sorted(heads) for key, heads in g._adj.items()}
    return adj, dict(g.payload)
