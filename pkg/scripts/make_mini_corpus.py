#!/usr/bin/env python3
"""Regenerate the bundled 50-example mini corpus under data/mini_corpus/.

Tables are small hand-written TSVs; gold answers are computed with the naive
reference interpreter (never the fast executor) so the bundled corpus stays an
independent oracle.  A few answers carry units on purpose: execution output is
unit-less, so those examples should pass flexible but not strict comparison,
mirroring real annotation style.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from tabalg.evaluate import Denotation, flexible_da
from tabalg.frontend import parse_sql, to_graph
from tabalg.reference import answer_tree
from tabalg.values import load_table

OUT = ROOT / "data" / "mini_corpus"

TABLES = {
    "tables/honour.tsv": """\
Season\tEast Region
2000-01\tnewtongrange
2001-02\tfauldhouse
2002-03\tmusselburgh
2003-04\twhitburn
2004-05\tdalkeith thistle
2005-06\tarmadale
2006-07\tfauldhouse
""",
    "tables/medals.tsv": """\
nation\tgold\tsilver\tbronze\ttotal
scotland\t5\t3\t2\t10
wales\t2\t2\t1\t5
ireland\t2\t4\t3\t9
england\t7\t1\t4\t12
norway\t0\t2\t2\t4
iceland\t0\t0\t3\t3
""",
    "tables/cities.tsv": """\
city\tpopulation\tarea km2\tregion
edinburgh\t488050\t264\tlothian
glasgow\t593245\t175\tstrathclyde
aberdeen\t196670\t186\tgrampian
dundee\t147710\t60\ttayside
stirling\t36440\t22\tcentral
falkirk\t32420\t31\tcentral
perth\t46960\t18\ttayside
st andrews\t\t12\tfife
""",
    "tables/albums.tsv": """\
year\talbum\tlabel\tsales
1994\tdookie\treprise\t20000000
1997\tnimrod\treprise\t9000000
2000\twarning\treprise\t3500000
2004\tamerican idiot\treprise\t16000000
2009\tbreakdown\tepitaph\t4500000
2012\tuno\tepitaph\t900000
""",
    "tables/times.tsv": """\
rank\tathlete\tcountry\ttime\tnotes
1\tbolt\tjamaica\t9.69\twr
2\tthompson\ttrinidad\t9.89\t
3\tdix\tusa\t9.91\t
4\tburns\ttrinidad\t9.95\tsb
5\tmartina\tnetherlands\t9.93\tnr
""",
    "tables/prices.tsv": """\
item\tprice\tquantity\tweight\tcategory
laptop\t1,200\t4\t2.2\toffice
monitor\t340\t9\t5.4\toffice
desk\t560\t3\t28\tfurniture
chair\t180\t12\t7.5\tfurniture
printer\t420\t2\t6.1\toffice
""",
    "tables/mixed.tsv": """\
name\tvalue\ttag
alpha\t10\ta, b
beta\tnone given\tx | y
gamma\t\tN3
delta\t7\tplain
epsilon\t10\tt
""",
}

# (id, table, question, sql, unit_wrap) -- gold answers come from the
# reference interpreter; unit_wrap decorates them WTQ-annotation style.
QUERIES = [
    ("honour-top-team", "tables/honour.tsv",
     "which team appears most often in the east region: fauldhouse or newtongrange?",
     "SELECT East Region FROM w WHERE East Region in ('fauldhouse', 'newtongrange') GROUP BY East Region ORDER BY COUNT ( id ) DESC LIMIT 1",
     None),
    ("honour-all-teams", "tables/honour.tsv",
     "which teams are listed in the east region?",
     "SELECT East Region FROM w", None),
    ("honour-fauldhouse-seasons", "tables/honour.tsv",
     "in which seasons did fauldhouse make the list?",
     "SELECT Season FROM w WHERE East Region = 'fauldhouse'", None),
    ("honour-row-count", "tables/honour.tsv",
     "how many seasons are listed?",
     "SELECT count(id) FROM w", None),
    ("honour-other-teams", "tables/honour.tsv",
     "which teams other than fauldhouse made the list?",
     "SELECT East Region FROM w WHERE East Region != 'fauldhouse' GROUP BY East Region", None),
    ("honour-last-season", "tables/honour.tsv",
     "what is the most recent season listed?",
     "SELECT Season FROM w ORDER BY Season DESC LIMIT 1", None),
    ("honour-pair-count", "tables/honour.tsv",
     "how many times do fauldhouse or newtongrange appear?",
     "SELECT count(id) FROM w WHERE East Region IN ('fauldhouse', 'newtongrange')", None),
    ("medals-top-gold", "tables/medals.tsv",
     "which nation won the most gold medals?",
     "SELECT nation FROM w ORDER BY gold DESC LIMIT 1", None),
    ("medals-total-gold", "tables/medals.tsv",
     "how many gold medals were won in total?",
     "SELECT sum(gold) FROM w", None),
    ("medals-avg-total", "tables/medals.tsv",
     "what is the average medal total?",
     "SELECT avg(total) FROM w", None),
    ("medals-gold-above-two", "tables/medals.tsv",
     "which nations won more than two gold medals?",
     "SELECT nation FROM w WHERE gold > 2", None),
    ("medals-and-filter", "tables/medals.tsv",
     "which nations won at least two golds and at most three bronzes?",
     "SELECT nation FROM w WHERE gold >= 2 AND bronze <= 3", None),
    ("medals-total-spread", "tables/medals.tsv",
     "what is the difference between the best and worst medal totals?",
     "SELECT max(total) - min(total) FROM w", None),
    ("medals-best-nation", "tables/medals.tsv",
     "which nation has the highest medal total?",
     "SELECT nation FROM w WHERE total = (SELECT max(total) FROM w)", None),
    ("medals-wales-total", "tables/medals.tsv",
     "how many medals did wales win?",
     "SELECT total FROM w WHERE nation = 'wales'", None),
    ("medals-low-bronze", "tables/medals.tsv",
     "which nations won fewer than three bronze medals, alphabetically?",
     "SELECT nation FROM w WHERE bronze < 3 ORDER BY nation ASC", None),
    ("medals-gold-plus-silver", "tables/medals.tsv",
     "how many gold and silver medals were won altogether?",
     "SELECT sum(gold) + sum(silver) FROM w", None),
    ("medals-three-lowest-gold", "tables/medals.tsv",
     "what are the three lowest gold counts?",
     "SELECT gold FROM w ORDER BY gold ASC LIMIT 3", None),
    ("medals-two-smallest", "tables/medals.tsv",
     "which two gold-winning nations have the smallest totals?",
     "SELECT nation FROM w WHERE gold != 0 ORDER BY total ASC LIMIT 2", None),
    ("cities-large", "tables/cities.tsv",
     "which cities cover more than 100 square kilometres?",
     "SELECT city FROM w WHERE area km2 > 100", None),
    ("cities-shared-regions", "tables/cities.tsv",
     "which regions contain more than one listed city?",
     "SELECT region FROM w GROUP BY region HAVING count(id) > 1", None),
    ("cities-per-region", "tables/cities.tsv",
     "how many cities are listed per region?",
     "SELECT count(id) FROM w GROUP BY region", None),
    ("cities-smallest", "tables/cities.tsv",
     "which city has the smallest recorded population?",
     "SELECT city FROM w WHERE population = (SELECT min(population) FROM w)", None),
    ("cities-central-avg", "tables/cities.tsv",
     "what is the average population of the central region cities?",
     "SELECT avg(population) FROM w WHERE region = 'central'", None),
    ("cities-biggest-area", "tables/cities.tsv",
     "which city covers the largest area?",
     "SELECT city FROM w ORDER BY area km2 DESC LIMIT 1", None),
    ("cities-dundee-area", "tables/cities.tsv",
     "what area does dundee cover?",
     "SELECT `area km2` FROM w WHERE city = 'dundee'", "{} km"),
    ("cities-top-region", "tables/cities.tsv",
     "which region has the most cities listed?",
     "SELECT region FROM w GROUP BY region ORDER BY count(id) DESC LIMIT 1", None),
    ("cities-two-region-pop", "tables/cities.tsv",
     "how many people live in lothian or fife cities?",
     "SELECT sum(population) FROM w WHERE region = 'lothian' OR region = 'fife'", None),
    ("cities-east-coast", "tables/cities.tsv",
     "which cities are in tayside or grampian, alphabetically?",
     "SELECT city FROM w WHERE region IN ('tayside', 'grampian') ORDER BY city ASC", None),
    ("albums-after-2000", "tables/albums.tsv",
     "which albums came out after 2000?",
     "SELECT album FROM w WHERE year > 2000", None),
    ("albums-best-seller", "tables/albums.tsv",
     "which album sold the most copies?",
     "SELECT album FROM w ORDER BY sales DESC LIMIT 1", None),
    ("albums-big-labels", "tables/albums.tsv",
     "which labels sold more than ten million records?",
     "SELECT label FROM w GROUP BY label HAVING sum(sales) > 10000000", None),
    ("albums-early-reprise", "tables/albums.tsv",
     "how many reprise albums predate 2005?",
     "SELECT count(id) FROM w WHERE label = 'reprise' AND year < 2005", None),
    ("albums-warning-millions", "tables/albums.tsv",
     "how many million copies did warning sell?",
     "SELECT sales / 1000000 FROM w WHERE album = 'warning'", None),
    ("albums-big-years", "tables/albums.tsv",
     "in which years did an album sell at least 4,500,000 copies?",
     "SELECT year FROM w WHERE sales >= 4500000 ORDER BY year ASC", None),
    ("albums-label-peaks", "tables/albums.tsv",
     "what is the best sales figure per label?",
     "SELECT max(sales) FROM w GROUP BY label", None),
    ("times-fast", "tables/times.tsv",
     "which athletes ran under 9.9 seconds?",
     "SELECT athlete FROM w WHERE time < 9.9", None),
    ("times-winner", "tables/times.tsv",
     "who ran the fastest time?",
     "SELECT athlete FROM w ORDER BY time ASC LIMIT 1", None),
    ("times-noted", "tables/times.tsv",
     "how many runs carry a note?",
     "SELECT count(notes) FROM w", None),
    ("times-no-record", "tables/times.tsv",
     "which countries' runs were not world records?",
     "SELECT country FROM w WHERE notes != 'wr'", None),
    ("prices-laptop", "tables/prices.tsv",
     "how much does the laptop cost?",
     "SELECT price FROM w WHERE item = 'laptop'", ["$1,200"]),
    ("prices-office-stock", "tables/prices.tsv",
     "how many office items are in stock?",
     "SELECT sum(quantity) FROM w WHERE category = 'office'", None),
    ("prices-monitor-weight", "tables/prices.tsv",
     "how heavy is the monitor?",
     "SELECT weight FROM w WHERE item = 'monitor'", "{} kg"),
    ("prices-big-positions", "tables/prices.tsv",
     "which items account for more than 3,000 in value?",
     "SELECT item FROM w WHERE price * quantity > 3000", None),
    ("mixed-alpha-tag", "tables/mixed.tsv",
     "what is the tag of alpha?",
     "SELECT tag FROM w WHERE name = 'alpha'", None),
    ("mixed-tens", "tables/mixed.tsv",
     "which names carry the value 10?",
     "SELECT name FROM w WHERE value = 10", None),
]

# WTQ-style gaps: annotations exist for only part of the data.
NO_SQL = [
    ("nosql-hardest-question", "tables/mixed.tsv",
     "which entry would a human pick as the odd one out?", ["beta"]),
    ("nosql-open-ended", "tables/cities.tsv",
     "is the north better represented than the south?", ["no"]),
]

BAD_SQL = [
    ("badsql-join", "tables/medals.tsv",
     "which nations appear in both tables?",
     "SELECT nation FROM w JOIN v", ["scotland"]),
    ("badsql-garbled", "tables/times.tsv",
     "who was second?",
     "SELECT FROM w WHERE", ["thompson"]),
]


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "tables").mkdir(exist_ok=True)
    for rel, content in TABLES.items():
        (OUT / rel).write_text(content, encoding="utf-8", newline="\n")

    records = []
    for qid, table_rel, question, sql, unit_wrap in QUERIES:
        table = load_table(OUT / table_rel)
        graph = to_graph(parse_sql(sql, table.column_names), table)
        answer = answer_tree(graph)
        if unit_wrap:
            if isinstance(unit_wrap, list):
                wrapped = unit_wrap
            else:
                wrapped = [unit_wrap.format(v) for v in answer]
            assert flexible_da(Denotation.of(answer), Denotation.of(wrapped)), qid
            answer = wrapped
        records.append(
            {"id": qid, "question": question, "table": table_rel, "sql": sql, "answer": answer}
        )
    for qid, table_rel, question, answer in NO_SQL:
        records.append(
            {"id": qid, "question": question, "table": table_rel, "sql": None, "answer": answer}
        )
    for qid, table_rel, question, sql, answer in BAD_SQL:
        records.append(
            {"id": qid, "question": question, "table": table_rel, "sql": sql, "answer": answer}
        )

    assert len(records) == 50, len(records)
    records.sort(key=lambda r: r["id"])
    with open(OUT / "corpus.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    print(f"wrote {len(records)} examples to {OUT}")


if __name__ == "__main__":
    main()
