"""Regenerate the bundled fixture corpus under src/calf/data/fixtures/.

Hand-authored content, deterministic output: rerunning this script must
reproduce the shipped files byte for byte. The corpus is sized for tests:
20 instances, exactly 4 of them with gold answers, passages that restate
the facts verbosely (so the lexical scorer can find them), and candidate
files with a deliberate mix of answers that pass the gate, answers with
wrong citations, and answers with fabricated content.
"""
from __future__ import annotations

import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.normpath(os.path.join(HERE, "..", "src", "calf", "data", "fixtures"))

# (id, question, [(title, text, score)...], [facts], gold_answer | None)
INSTANCES = [
    (
        "q-mawsynram",
        "What is the wettest place on Earth?",
        [
            ("Mawsynram", "Mawsynram is a village in Meghalaya, India. It is the wettest place on Earth, receiving the highest average annual rainfall of any place.", 0.9),
            ("Atacama", "The Atacama Desert in Chile is the driest place on Earth.", 0.4),
            ("Rain gauges", "Annual rainfall is measured by weather stations with rain gauges.", 0.2),
        ],
        ["Mawsynram is the wettest place on Earth.", "Mawsynram is a village in Meghalaya."],
        "Mawsynram is the wettest place on Earth. [1] It is a village in Meghalaya. [1]",
    ),
    (
        "q-atacama",
        "What is the driest place on Earth?",
        [
            ("Atacama", "The Atacama Desert in Chile is the driest place on Earth, the driest desert in the world.", 0.8),
            ("Sahara", "The Sahara is the largest hot desert in the world.", 0.5),
            ("Chile", "Chile lies along the west of South America.", 0.3),
        ],
        ["The Atacama Desert is the driest place on Earth.", "The Atacama Desert is in Chile."],
        "The Atacama Desert is the driest place on Earth. [1] It lies in Chile. [1][3]",
    ),
    (
        "q-everest",
        "What is the tallest mountain above sea level?",
        [
            ("Mount Everest", "Mount Everest is the tallest mountain above sea level on Earth. Its peak is the highest point above sea level.", 0.9),
            ("Mariana Trench", "The Mariana Trench contains the deepest known point of the ocean.", 0.3),
            ("Mountains", "A mountain is a landform that rises above its region.", 0.2),
        ],
        ["Mount Everest is the tallest mountain above sea level."],
        "Mount Everest is the tallest mountain above sea level. [1]",
    ),
    (
        "q-nile",
        "What is the longest river in Africa?",
        [
            ("Nile", "The Nile is the longest river in Africa. The Nile is a river in Africa.", 0.7),
            ("Amazon", "The Amazon is the largest river by volume of water in the world.", 0.6),
            ("Rivers", "A river is a natural stream of fresh water.", 0.1),
        ],
        ["The Nile is the longest river in Africa."],
        "The Nile is the longest river in Africa. [1]",
    ),
    (
        "q-baikal",
        "What is the deepest lake on Earth?",
        [
            ("Lake Baikal", "Lake Baikal is the deepest lake on Earth. It is a Russian lake holding the largest volume of fresh water.", 0.8),
            ("Lakes", "A lake is a body of water surrounded by land.", 0.3),
            ("Vostok", "Vostok is a Russian research station in Antarctica.", 0.1),
        ],
        ["Lake Baikal is the deepest lake on Earth."],
        None,
    ),
    (
        "q-mariana",
        "Where is the deepest point of the ocean?",
        [
            ("Mariana Trench", "The Mariana Trench in the Pacific contains the deepest known point of the ocean.", 0.9),
            ("Pacific", "The Pacific is the largest ocean on Earth.", 0.5),
            ("Everest", "Mount Everest is the tallest mountain above sea level.", 0.2),
        ],
        ["The deepest point of the ocean is in the Mariana Trench.", "The Mariana Trench is in the Pacific."],
        None,
    ),
    (
        "q-vostok",
        "Where was the coldest temperature recorded?",
        [
            ("Vostok Station", "The coldest temperature on Earth was recorded at Vostok, a Russian research station in Antarctica.", 0.8),
            ("Antarctica", "Antarctica is the coldest region on Earth.", 0.6),
            ("Deserts", "A desert has very dry weather.", 0.1),
        ],
        ["The coldest temperature was recorded at Vostok in Antarctica."],
        None,
    ),
    (
        "q-venus",
        "What is the hottest planet?",
        [
            ("Venus", "Venus is the hottest planet. Its surface is heated by an atmosphere of carbon dioxide.", 0.9),
            ("Mars", "Mars is a red planet with iron oxide on its surface.", 0.4),
            ("Planets", "A planet orbits a star.", 0.2),
        ],
        ["Venus is the hottest planet.", "The atmosphere of Venus is carbon dioxide."],
        None,
    ),
    (
        "q-mars",
        "Why is Mars red?",
        [
            ("Mars", "Mars is red because iron oxide covers its surface.", 0.8),
            ("Venus", "Venus is the hottest planet in the system.", 0.3),
            ("Iron", "Iron oxide is red.", 0.5),
        ],
        ["Mars is red because of iron oxide on its surface."],
        None,
    ),
    (
        "q-brazil",
        "Which country is the largest coffee producer?",
        [
            ("Coffee", "Brazil is the largest producer of coffee in the world.", 0.9),
            ("Tea", "Kenya is a largest exporter of tea.", 0.3),
            ("Brazil", "Brazil is the largest country in South America.", 0.6),
        ],
        ["Brazil is the largest coffee producer."],
        None,
    ),
    (
        "q-kenya",
        "Which country is a leading tea exporter?",
        [
            ("Tea", "Kenya is a leading exporter of tea in the world.", 0.8),
            ("Coffee", "Brazil is the largest producer of coffee.", 0.4),
            ("Kenya", "Kenya is a country in east Africa.", 0.5),
        ],
        ["Kenya is a leading tea exporter."],
        None,
    ),
    (
        "q-greenland",
        "What is the largest island?",
        [
            ("Greenland", "Greenland is the largest island in the world.", 0.9),
            ("Islands", "An island is land surrounded by water.", 0.2),
            ("Australia", "Australia is counted as a continent, not an island.", 0.4),
        ],
        ["Greenland is the largest island."],
        None,
    ),
    (
        "q-panama",
        "What does the Panama Canal connect?",
        [
            ("Panama Canal", "The Panama Canal connects the Atlantic with the Pacific.", 0.9),
            ("Canals", "A canal is a constructed waterway.", 0.2),
            ("Panama", "Panama is a country between two continents.", 0.3),
        ],
        ["The Panama Canal connects the Atlantic with the Pacific."],
        None,
    ),
    (
        "q-paris",
        "What is the capital of France?",
        [
            ("Paris", "Paris is the capital of France and its largest city.", 0.9),
            ("Tokyo", "Tokyo is the capital of Japan.", 0.2),
            ("France", "France is a country in the west of Europe.", 0.5),
        ],
        ["Paris is the capital of France."],
        None,
    ),
    (
        "q-tokyo",
        "What is the capital of Japan?",
        [
            ("Tokyo", "Tokyo is the capital of Japan and its largest city.", 0.9),
            ("Paris", "Paris is the capital of France.", 0.2),
            ("Japan", "Japan is an island country in the east.", 0.4),
        ],
        ["Tokyo is the capital of Japan."],
        None,
    ),
    (
        "q-amazon",
        "Which river carries the largest volume of water?",
        [
            ("Amazon", "The Amazon is the river with the largest volume of water in the world.", 0.8),
            ("Nile", "The Nile is the longest river in Africa.", 0.5),
            ("Water", "Fresh water is held by rivers and lakes.", 0.2),
        ],
        ["The Amazon carries the largest volume of water."],
        None,
    ),
    (
        "q-sahara",
        "What is the largest hot desert?",
        [
            ("Sahara", "The Sahara is the largest hot desert in the world, a desert in the north of Africa.", 0.9),
            ("Atacama", "The Atacama Desert is the driest desert.", 0.4),
            ("Africa", "Africa is the second largest continent.", 0.3),
        ],
        ["The Sahara is the largest hot desert."],
        None,
    ),
    (
        "q-pacific",
        "What is the largest ocean?",
        [
            ("Pacific", "The Pacific is the largest ocean on Earth.", 0.9),
            ("Oceans", "An ocean is a large body of water.", 0.3),
            ("Mariana", "The Mariana Trench is in the Pacific.", 0.5),
        ],
        ["The Pacific is the largest ocean."],
        None,
    ),
    (
        "q-whale",
        "What is the largest animal?",
        [
            ("Blue whale", "The blue whale is the largest animal known on Earth.", 0.9),
            ("Whales", "A whale lives in the ocean.", 0.3),
            ("Greenland", "Greenland is the largest island.", 0.1),
        ],
        ["The blue whale is the largest animal."],
        None,
    ),
    (
        "q-light",
        "How fast is light in vacuum?",
        [
            ("Light", "Light in vacuum travels about three hundred thousand kilometers in one second.", 0.0),
            ("Physics", "The speed of light in vacuum is a constant of nature.", 0.0),
            ("Sound", "Sound travels far more slowly than light.", 0.0),
        ],
        ["Light travels about three hundred thousand kilometers in one second."],
        None,
    ),
]

# iteration 0: 10 candidates. Good answers restate a fact and cite its
# passage; wrong-citation answers cite a distractor; fabricated answers
# state things no passage or fact supports.
CANDIDATES_ITER0 = [
    ("q-mawsynram", "Mawsynram is the wettest place on Earth. [1]"),
    ("q-atacama", "The Atacama Desert is the driest place on Earth. [1]"),
    ("q-everest", "Mount Everest is the tallest mountain above sea level. [1]"),
    ("q-baikal", "Lake Baikal is the deepest lake on Earth. [1]"),
    ("q-venus", "Venus is the hottest planet. [1] Its thick atmosphere is carbon dioxide. [1]"),
    # wrong citations: the text is right, the cited passage is not
    ("q-mawsynram", "Mawsynram is the wettest place on Earth. [2]"),
    ("q-nile", "The Nile is the longest river in Africa. [3]"),
    ("q-paris", "Paris is the capital of France. [2]"),
    # fabricated content
    ("q-greenland", "Borneo is the largest island. [1]"),
    ("q-vostok", "The coldest temperature was recorded in the Sahara. [3]"),
]

# iteration 1: 8 candidates, one with a sentence long enough to take the
# sampling path for attribution. Every answer text here contains at least
# one content word absent from all three passages of its instance, so no
# candidate (or citation-resampled variant) can clear recall 0.9 and the
# dynamic threshold is forced to walk down.
CANDIDATES_ITER1 = [
    ("q-mariana", "The deepest point of the ocean lies in the Mariana Trench. [1]"),
    ("q-pacific", "The Pacific is the largest ocean on the planet. [1]"),
    ("q-panama", "The Panama Canal connects the Atlantic ocean with the Pacific. [1]"),
    ("q-brazil", "Brazil is the largest coffee producer on the planet. [1]"),
    ("q-sahara", "The Sahara is the largest hot desert in the world, a desert found in the north of Africa. [1]"),
    ("q-tokyo", "Tokyo is the famous capital of Japan. [1]"),
    # wrong citation and fabrication again
    ("q-amazon", "The Amazon carries the largest volume of water. [2]"),
    ("q-kenya", "Kenya is the largest coffee producer. [2]"),
]


def _dump(path: str, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True, separators=(",", ":")) + "\n")


def main() -> None:
    os.makedirs(OUT, exist_ok=True)
    instance_rows = []
    for iid, question, passages, facts, gold in INSTANCES:
        row = {
            "id": iid,
            "question": question,
            "passages": [
                {"title": t, "text": x, "retrieval_score": s}
                for t, x, s in passages
            ],
            "facts": facts,
        }
        if gold is not None:
            row["gold_answer"] = gold
        instance_rows.append(row)
    _dump(os.path.join(OUT, "instances.jsonl"), instance_rows)
    _dump(
        os.path.join(OUT, "candidates_iter0.jsonl"),
        [{"instance_id": i, "answer": a} for i, a in CANDIDATES_ITER0],
    )
    _dump(
        os.path.join(OUT, "candidates_iter1.jsonl"),
        [{"instance_id": i, "answer": a} for i, a in CANDIDATES_ITER1],
    )
    gold_count = sum(1 for *_rest, gold in INSTANCES if gold is not None)
    print(f"{len(INSTANCES)} instances ({gold_count} with gold answers) -> {OUT}")


if __name__ == "__main__":
    main()
