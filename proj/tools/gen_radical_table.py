#!/usr/bin/env python3
"""Build data/radicals.tsv from Unihan radical-stroke data.

Accepts either the official Unihan text files (any file containing
"U+XXXX<TAB>kRSUnicode<TAB>value" lines) or an SQLite dump with a
(character, SUnicode) table such as the one shipped by the cjk-unihan
npm package.  Only the first radical analysis is kept and the
simplified-form apostrophe is dropped.
"""
import argparse
import re
import sqlite3
import sys


def parse_rs(value):
    first = value.split()[0]
    radical = first.split(".")[0].rstrip("'")
    rid = int(radical)
    if not 1 <= rid <= 214:
        raise ValueError(f"radical out of range: {value}")
    return rid


def from_text(paths):
    table = {}
    for path in paths:
        with open(path, encoding="utf-8") as f:
            for line in f:
                if line.startswith("#") or "\tkRSUnicode\t" not in line:
                    continue
                cp, _, value = line.rstrip("\n").split("\t")
                table[int(cp[2:], 16)] = parse_rs(value)
    return table


def decode_sqlite_char(s):
    if len(s) == 1:
        return ord(s)
    m = re.fullmatch(r"\\x\{([0-9A-Fa-f]+)\}", s)
    if m:
        return int(m.group(1), 16)
    if s.isdigit():
        return int(s)
    raise ValueError(f"unrecognised character field {s!r}")


def from_sqlite(path):
    table = {}
    con = sqlite3.connect(path)
    for ch, rs in con.execute("SELECT character, SUnicode FROM unihan"):
        if rs:
            table[decode_sqlite_char(ch)] = parse_rs(rs)
    return table


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("inputs", nargs="+")
    ap.add_argument("--sqlite", action="store_true")
    ap.add_argument("-o", "--output", default="-")
    args = ap.parse_args()
    table = from_sqlite(args.inputs[0]) if args.sqlite else from_text(args.inputs)
    out = sys.stdout if args.output == "-" else open(args.output, "w", encoding="utf-8", newline="\n")
    out.write("# codepoint\tKangxi radical (Unihan kRSUnicode, first analysis)\n")
    for cp in sorted(table):
        out.write(f"{cp:X}\t{table[cp]}\n")


if __name__ == "__main__":
    main()
