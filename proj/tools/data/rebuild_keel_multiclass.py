"""Regenerate the KEEL-format datasets under data/ from wheels on PyPI.

    pip download --no-deps keel-ds imbalanced-databases -d /tmp/dl
    pip download --no-deps --only-binary=:all: orange3 -d /tmp/dl
    python3 tools/data/rebuild_keel_multiclass.py /tmp/dl data/

Wine and Hayes-Roth come from keel_ds as-is (headers re-attached). Glass is
the original UCI file. Ecoli is reassembled from the KEEL one-vs-rest
decompositions: rows are matched on their feature tuple and each row takes the
class whose decomposition isolates it. Zoo is converted from Orange's copy.
"""
import collections
import glob
import pathlib
import sys
import zipfile


def data_lines(text):
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("@"):
            yield [c.strip() for c in line.split(",")]


def write_keel(path, relation, attrs, classes, rows, kind="real"):
    lines = [f"@relation {relation}"]
    for a in attrs:
        lines.append(f"@attribute {a} {kind}")
    lines.append("@attribute Class {" + ", ".join(classes) + "}")
    lines.append("@inputs " + ", ".join(attrs))
    lines.append("@outputs Class")
    lines.append("@data")
    for features, label in rows:
        lines.append(", ".join(features) + ", " + label)
    path.write_text("\n".join(lines) + "\n")
    counts = collections.Counter(label for _, label in rows)
    print(f"{path.name}: {len(rows)} rows, {dict(sorted(counts.items()))}")


def ecoli_key(cells):
    # Several decompositions drop Chg and store 0.xy as "xy" (str(float)[2:]).
    vals = [float(c) for c in cells]
    keep = (0, 1, 2, 4, 5, 6)
    if len(vals) == 6:
        return tuple(vals)
    if max(vals) > 1.5:
        return tuple(vals[i] for i in keep)
    return tuple(1.0 if vals[i] == 1.0 else float(repr(vals[i])[2:] or 0) for i in keep)


def build_ecoli(zf):
    def rows(name):
        text = zf.read(f"imbalanced_databases/data/{name}/{name}.dat").decode()
        return [(c[:-1], c[-1]) for c in data_lines(text)]

    def keys(name, positive_only=False):
        return {ecoli_key(f) for f, y in rows(name) if not positive_only or y == "positive"}

    # KEEL numbers ecoli classes alphabetically: cp im imL imS imU om omL pp.
    cp = keys("ecoli-0_vs_1", True)
    im = keys("ecoli1", True)
    pp = keys("ecoli2", True)
    imu = keys("ecoli3", True)
    om = keys("ecoli4", True)
    oml = keys("ecoli-0-1-4-6_vs_5") - cp - im - imu - om
    iml = keys("ecoli-0-1-3-7_vs_2-6", True) - oml
    by_class = [("cp", cp), ("im", im), ("pp", pp), ("imU", imu), ("om", om),
                ("omL", oml), ("imL", iml)]

    out = []
    for features, _ in rows("ecoli1"):
        key = ecoli_key(features)
        label = next((name for name, members in by_class if key in members), "imS")
        out.append((features, label))
    return out


def main():
    src = pathlib.Path(sys.argv[1])
    out = pathlib.Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    keel = zipfile.ZipFile(next(iter(glob.glob(str(src / "keel_ds-*.whl")))))
    imbdb = zipfile.ZipFile(next(iter(glob.glob(str(src / "imbalanced_databases-*.whl")))))
    orange = zipfile.ZipFile(next(iter(glob.glob(str(src / "orange3-*.whl")))))

    wine = [(c[:-1], c[-1]) for c in data_lines(keel.read("keel_ds/data/balanced/raw/wine.dat").decode())]
    write_keel(out / "wine.dat", "wine",
               ["Alcohol", "MalicAcid", "Ash", "AlcalinityOfAsh", "Magnesium",
                "TotalPhenols", "Flavanoids", "NonflavanoidsPhenols", "Proanthocyanins",
                "ColorIntensity", "Hue", "OD280_OD315", "Proline"],
               ["1", "2", "3"], wine)

    hayes = [(c[:-1], c[-1]) for c in data_lines(keel.read("keel_ds/data/balanced/raw/hayes-roth.dat").decode())]
    write_keel(out / "hayes-roth.dat", "hayes-roth",
               ["Hobby", "Age", "EducationalLevel", "MaritalStatus"],
               ["1", "2", "3"], hayes, kind="integer")

    glass = [(c[1:-1], c[-1]) for c in data_lines(imbdb.read("imbalanced_databases/data/glass/glass.data.txt").decode())]
    write_keel(out / "glass.dat", "glass",
               ["RI", "Na", "Mg", "Al", "Si", "K", "Ca", "Ba", "Fe"],
               ["1", "2", "3", "5", "6", "7"], glass)

    write_keel(out / "ecoli.dat", "ecoli",
               ["Mcg", "Gvh", "Lip", "Chg", "Aac", "Alm1", "Alm2"],
               ["cp", "im", "pp", "imU", "om", "omL", "imL", "imS"], build_ecoli(imbdb))

    zoo_lines = orange.read("Orange/datasets/zoo.tab").decode().splitlines()
    header = zoo_lines[0].split("\t")
    zoo = []
    for line in zoo_lines[3:]:
        cells = line.split("\t")
        if len(cells) == len(header):
            zoo.append((cells[1:-1], cells[-1]))
    classes = sorted({label for _, label in zoo})
    write_keel(out / "zoo.dat", "zoo", header[1:-1], classes, zoo, kind="integer")


if __name__ == "__main__":
    main()
