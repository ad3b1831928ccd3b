#!/usr/bin/env python3
"""Build a binary 20 Newsgroups task in svmlight form.

Reads the standard by-date split, either from an extracted
`20news-bydate` directory (with `20news-bydate-train/` and
`20news-bydate-test/` inside) or from scikit-learn's local cache. Writes
`train.svm`, `test.svm` and `vocab.txt` into the output directory; point
`BAYESPA_20NG_DIR` at it to enable the 20 Newsgroups acceptance checks.
"""

import argparse
import pathlib

from sklearn.datasets import fetch_20newsgroups, load_files
from sklearn.feature_extraction.text import CountVectorizer

DEFAULT_GROUPS = ("comp.graphics", "rec.sport.hockey")


def load_split(args, subset):
    if args.source:
        root = pathlib.Path(args.source) / f"20news-bydate-{subset}"
        data = load_files(root, categories=list(args.groups), encoding="latin-1", decode_error="replace")
        names = data.target_names
        return data.data, [names[t] for t in data.target]
    data = fetch_20newsgroups(
        subset=subset,
        categories=list(args.groups),
        remove=("headers", "footers", "quotes") if args.strip else (),
        download_if_missing=args.download,
    )
    return data.data, [data.target_names[t] for t in data.target]


def write_svmlight(path, matrix, labels, positive):
    matrix = matrix.tocsr()
    kept = 0
    with open(path, "w") as out:
        for row, group in enumerate(labels):
            start, end = matrix.indptr[row], matrix.indptr[row + 1]
            if start == end:
                continue
            pairs = " ".join(f"{j}:{c}" for j, c in zip(matrix.indices[start:end], matrix.data[start:end]))
            out.write(f"{'+1' if group == positive else '-1'} {pairs}\n")
            kept += 1
    return kept


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--source", help="extracted 20news-bydate directory; defaults to the scikit-learn cache")
    p.add_argument("--groups", nargs=2, default=DEFAULT_GROUPS, metavar=("POSITIVE", "NEGATIVE"))
    p.add_argument("--vocab", type=int, default=5000, help="keep the most frequent training words")
    p.add_argument("--min-df", type=int, default=3)
    p.add_argument("--strip", action="store_true", help="drop headers, signatures and quotes")
    p.add_argument("--download", action="store_true", help="let scikit-learn download the data if missing")
    args = p.parse_args()

    train_text, train_labels = load_split(args, "train")
    test_text, test_labels = load_split(args, "test")
    vectorizer = CountVectorizer(
        lowercase=True,
        stop_words="english",
        token_pattern=r"(?u)\b[a-zA-Z][a-zA-Z]+\b",
        min_df=args.min_df,
        max_features=args.vocab,
    )
    train = vectorizer.fit_transform(train_text)
    test = vectorizer.transform(test_text)

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    positive = args.groups[0]
    n_train = write_svmlight(out / "train.svm", train, train_labels, positive)
    n_test = write_svmlight(out / "test.svm", test, test_labels, positive)
    (out / "vocab.txt").write_text("\n".join(vectorizer.get_feature_names_out()) + "\n")
    print(f"{positive} vs {args.groups[1]}: {n_train} train / {n_test} test documents, "
          f"{len(vectorizer.vocabulary_)} words -> {out}")


if __name__ == "__main__":
    main()
