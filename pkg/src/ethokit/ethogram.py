"""Behavior vocabulary: class catalog, technical codes, label resolution.

The default ethogram ships as a versioned CSV data file
(``data/ethogram_v1.csv``, schema ``code,name,species,technical``) with
18 behavioral classes for zebras and giraffes plus the four technical
visibility classes. "Out of Sight" and friends are modeled as labels,
not absence of data, so visibility filtering stays explicit.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

OCCLUDED = "OCL"
OUT_OF_FOCUS = "OOC"
OUT_OF_FRAME = "OOF"
OUT_OF_SIGHT = "OOS"
TECHNICAL_CODES = frozenset({OCCLUDED, OUT_OF_FOCUS, OUT_OF_FRAME, OUT_OF_SIGHT})

SPECIES_SCOPES = ("zebra", "giraffe", "both")

_ETHOGRAM_HEADER = ["code", "name", "species", "technical"]

# Free-text behavior labels seen in annotation exports, normalized to
# lowercase alphanumerics, mapped to ethogram codes.
_NAME_ALIASES = {
    "walk": "W",
    "run": "R",
    "trot": "TR",
    "browse": "B",
    "graze": "G",
    "grazing": "G",
    "chase": "C",
    "fight": "F",
    "herd": "H",
    "sniff": "S",
    "drink": "D",
    "dust": "DU",
    "urinate": "U",
    "defecate": "DF",
    "lyingdown": "L",
    "liedown": "L",
    "headup": "HU",
    "autogroom": "AG",
    "selfgroom": "AG",
    "mutualgroom": "MG",
    "mount": "M",
    "mating": "M",
    "occluded": OCCLUDED,
    "outoffocus": OUT_OF_FOCUS,
    "outofframe": OUT_OF_FRAME,
    "outofsight": OUT_OF_SIGHT,
}


def _normalize(label: str) -> str:
    return "".join(ch for ch in label.lower() if ch.isalnum())


@dataclass(frozen=True)
class BehaviorClass:
    code: str
    name: str
    species: str  # zebra | giraffe | both
    technical: bool = False


@dataclass(frozen=True)
class Ethogram:
    """Immutable behavior catalog with unique codes.

    Technical (visibility) classes are restricted to the four canonical
    codes so that visibility filtering means the same thing for every
    ethogram variant.
    """

    classes: tuple[BehaviorClass, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "classes", tuple(self.classes))
        seen: set[str] = set()
        for cls in self.classes:
            if cls.code in seen:
                raise ValueError(f"duplicate ethogram code {cls.code!r}")
            seen.add(cls.code)
            if cls.species not in SPECIES_SCOPES:
                raise ValueError(
                    f"class {cls.code!r}: species must be one of {SPECIES_SCOPES}"
                )
            if cls.technical and cls.code not in TECHNICAL_CODES:
                raise ValueError(
                    f"class {cls.code!r}: technical classes must use one of "
                    f"{sorted(TECHNICAL_CODES)}"
                )
            if not cls.technical and cls.code in TECHNICAL_CODES:
                raise ValueError(f"class {cls.code!r} must be marked technical")
        object.__setattr__(self, "_by_code", {c.code: c for c in self.classes})

    def codes(self) -> list[str]:
        return [c.code for c in self.classes]

    def behavioral_codes(self) -> list[str]:
        return [c.code for c in self.classes if not c.technical]

    def technical_codes(self) -> frozenset[str]:
        return frozenset(c.code for c in self.classes if c.technical)

    def __contains__(self, code: str) -> bool:
        return code in self._by_code

    def class_for(self, code: str) -> BehaviorClass:
        return self._by_code[code]

    def is_technical(self, code: str) -> bool:
        cls = self._by_code.get(code)
        return cls is not None and cls.technical

    def resolve(self, label: str) -> str | None:
        """Map a free-text behavior label to an ethogram code.

        Tries exact code, exact name, then a normalized alias table.
        Returns None when nothing matches.
        """
        if label in self._by_code:
            return label
        for cls in self.classes:
            if cls.name == label:
                return cls.code
        norm = _normalize(label)
        for cls in self.classes:
            if _normalize(cls.name) == norm:
                return cls.code
        return _NAME_ALIASES.get(norm)


def parse_ethogram(text: str) -> Ethogram:
    """Parse ethogram CSV text (``code,name,species,technical``)."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != _ETHOGRAM_HEADER:
        raise ValueError(f"unexpected ethogram header {header!r}")
    classes = []
    for row in reader:
        if not row:
            continue
        if len(row) != 4:
            raise ValueError(f"ethogram row has {len(row)} fields: {row!r}")
        code, name, species, technical = row
        classes.append(BehaviorClass(code, name, species, technical == "1"))
    return Ethogram(tuple(classes))


def dump_ethogram(ethogram: Ethogram) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(_ETHOGRAM_HEADER)
    for cls in ethogram.classes:
        writer.writerow([cls.code, cls.name, cls.species, "1" if cls.technical else "0"])
    return out.getvalue()


def read_ethogram(path: str | Path) -> Ethogram:
    return parse_ethogram(Path(path).read_text(encoding="utf-8"))


def write_ethogram(ethogram: Ethogram, path: str | Path) -> None:
    Path(path).write_text(dump_ethogram(ethogram), encoding="utf-8")


@lru_cache(maxsize=1)
def default_ethogram() -> Ethogram:
    """The combined zebra/giraffe ethogram shipped with the package."""
    text = resources.files("ethokit.data").joinpath("ethogram_v1.csv").read_text("utf-8")
    return parse_ethogram(text)
