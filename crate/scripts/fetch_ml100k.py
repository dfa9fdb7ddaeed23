#!/usr/bin/env python3
"""Rebuild the GroupLens MovieLens 100K file layout (u.data, u.user, u.item).

The GroupLens host is not always reachable, but the RecBole wheel on PyPI
ships the complete 100K dataset in its atomic-file format. This script pulls
that wheel with pip and rewrites the three files the loader expects.

usage: scripts/fetch_ml100k.py [OUT_DIR]   (default: data/ml-100k)
"""
import pathlib
import subprocess
import sys
import tempfile
import zipfile

GENRES = [
    "unknown", "Action", "Adventure", "Animation", "Children's", "Comedy",
    "Crime", "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror",
    "Musical", "Mystery", "Romance", "Sci-Fi", "Thriller", "War", "Western",
]
PREFIX = "recbole/dataset_example/ml-100k/ml-100k."


def rows(z, kind):
    text = z.read(PREFIX + kind).decode("latin-1")
    return [line.split("\t") for line in text.splitlines()[1:] if line]


def main():
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "data/ml-100k")
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "recbole==1.2.1",
             "--no-deps", "-q", "-d", tmp],
            check=True,
        )
        wheel = next(pathlib.Path(tmp).glob("recbole-*.whl"))
        with zipfile.ZipFile(wheel) as z:
            inter = rows(z, "inter")
            users = rows(z, "user")
            items = rows(z, "item")

    with open(out / "u.data", "w", encoding="latin-1") as f:
        for user, item, rating, ts in inter:
            f.write(f"{user}\t{item}\t{int(float(rating))}\t{int(float(ts))}\n")
    with open(out / "u.user", "w", encoding="latin-1") as f:
        for user, age, gender, occupation, zip_code in users:
            f.write(f"{user}|{age}|{gender}|{occupation}|{zip_code}\n")
    with open(out / "u.item", "w", encoding="latin-1") as f:
        for item, title, year, genres in sorted(items, key=lambda r: int(r[0])):
            tokens = set(genres.split(" ")) if genres else set()
            unknown = tokens - set(GENRES)
            if unknown:
                raise SystemExit(f"unexpected genre tokens {unknown} for item {item}")
            flags = "|".join("1" if g in tokens else "0" for g in GENRES)
            shown = f"{title} ({year})" if year else title
            f.write(f"{item}|{shown}||||{flags}\n")
    print(f"wrote {len(inter)} ratings, {len(users)} users, {len(items)} items to {out}")


if __name__ == "__main__":
    main()
