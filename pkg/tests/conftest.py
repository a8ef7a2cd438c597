"""Shared fixtures: the four reference IR/SPARQL pairs and small graphs."""

from __future__ import annotations

import json

import pytest

from gqc import load_graph

# Four golden IR -> SPARQL pairs used across the suite.
ROW1_IR = (
    "which one has the smallest <A> duration </A> among "
    "<ES> <C> newscast </C> whose <A> duration </A> is number <V> 110 minute </V> </ES>"
)
ROW1_SPARQL = (
    'SELECT ?e WHERE { ?e instance_of ?c . ?c name "newscast" . '
    '?e duration ?pv_1 . ?pv_1 unit "minute" . ?pv_1 value "110"^^xsd:double . '
    "?e duration ?pv . ?pv value ?v } ORDER BY ?v LIMIT 1"
)

ROW2_IR = (
    "what is the relation from <ES> <E> The Spiderwick Chronicles </E> "
    "(<ES> ones that <R> genre </R> backward to <E> kid film </E> </ES>) </ES> "
    "to <E> John Sayles </E>"
)
ROW2_SPARQL = (
    'SELECT DISTINCT ?p WHERE { ?e_1 name "The Spiderwick Chronicles" . '
    '?e_1 genre ?e_3 . ?e_3 name "kid film" . ?e_2 name "John Sayles" . ?e_1 ?p ?e_2 }'
)

ROW3_IR = (
    "what is the qualifier <Q> start time </Q> of <E> Uzbekistan </E> "
    "that <R> capital </R> to <E> Tashkent </E>"
)
ROW3_SPARQL = (
    'SELECT DISTINCT ?qpv WHERE { ?e_1 name "Uzbekistan" . ?e_2 name "Tashkent" . '
    "?e_1 capital ?e_2 . [ fact_h ?e_1 ; fact_r capital ; fact_t ?e_2 ] start_time ?qpv }"
)

ROW4_IR = (
    "what is the qualifier <Q> start time </Q> of <E> Joseph L. Mankiewicz </E> "
    "that <R> educated at </R> to <E> Columbia University </E>"
)
ROW4_SPARQL = (
    'SELECT DISTINCT ?qpv WHERE { ?e_1 name "Joseph L. Mankiewicz" . '
    '?e_2 name "Columbia University" . ?e_1 educated_at ?e_2 . '
    "[ fact_h ?e_1 ; fact_r educated_at ; fact_t ?e_2 ] start_time ?qpv }"
)

GOLDEN_PAIRS = [
    (ROW1_IR, ROW1_SPARQL),
    (ROW2_IR, ROW2_SPARQL),
    (ROW3_IR, ROW3_SPARQL),
    (ROW4_IR, ROW4_SPARQL),
]


def capital_graph_doc() -> dict:
    return {
        "entities": [
            {
                "id": "Q1",
                "name": "Uzbekistan",
                "concepts": ["country"],
                "relations": [
                    {
                        "predicate": "capital",
                        "target": "Q2",
                        "qualifiers": [{"key": "start time", "type": "year", "value": 1930}],
                    }
                ],
            },
            {"id": "Q2", "name": "Tashkent", "concepts": ["city"]},
        ]
    }


@pytest.fixture
def capital_graph():
    return load_graph(json.dumps(capital_graph_doc()))


@pytest.fixture
def film_graph():
    # A director, two films with durations (one tied pair), and a spouse edge
    # with a start-time qualifier.
    doc = {
        "entities": [
            {
                "id": "d1",
                "name": "Stanley Kubrick",
                "concepts": ["human"],
                "attributes": [{"key": "date of birth", "type": "date", "value": "1928-07-26"}],
                "relations": [
                    {
                        "predicate": "spouse",
                        "target": "d2",
                        "qualifiers": [{"key": "start time", "type": "year", "value": 1958}],
                    }
                ],
            },
            {"id": "d2", "name": "Christiane Kubrick", "concepts": ["human"]},
            {
                "id": "f1",
                "name": "2001",
                "concepts": ["film"],
                "attributes": [{"key": "duration", "type": "number", "value": "142", "unit": "minute"}],
                "relations": [{"predicate": "director", "target": "d1"}],
            },
            {
                "id": "f2",
                "name": "The Shining",
                "concepts": ["film"],
                "attributes": [{"key": "duration", "type": "number", "value": "142", "unit": "minute"}],
                "relations": [{"predicate": "director", "target": "d1"}],
            },
            {
                "id": "f3",
                "name": "Short Cut",
                "concepts": ["film"],
                "attributes": [{"key": "duration", "type": "number", "value": "95", "unit": "minute"}],
                "relations": [],
            },
        ]
    }
    return load_graph(json.dumps(doc))
