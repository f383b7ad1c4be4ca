"""Design chromosomes: typed gene schemas, validation, and model-input encoding."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CategoricalGene:
    name: str
    options: tuple[str, ...]


@dataclass(frozen=True)
class NumericGene:
    name: str
    lo: float
    hi: float
    integer: bool = False


GeneSpec = CategoricalGene | NumericGene


@dataclass(frozen=True)
class Design:
    """One point in design space: a value per schema gene.

    Categorical genes store the option index (int); numeric genes store a
    bounded float (int when the gene is integer-valued). The gene tuple is
    hashable so fitness caches can key on it.
    """

    schema_id: str
    genes: tuple

    def to_dict(self) -> dict:
        return {"schema_id": self.schema_id, "genes": list(self.genes)}

    @staticmethod
    def from_dict(d: dict) -> "Design":
        return Design(schema_id=d["schema_id"], genes=tuple(d["genes"]))


class GeneSchema:
    """Ordered gene specification a Design must satisfy."""

    def __init__(self, schema_id: str, genes: tuple[GeneSpec, ...]):
        if not genes:
            raise ValueError("schema needs at least one gene")
        for g in genes:
            if isinstance(g, CategoricalGene):
                if len(g.options) < 1:
                    raise ValueError(f"categorical gene {g.name!r} has no options")
            elif isinstance(g, NumericGene):
                if not g.hi > g.lo:
                    raise ValueError(f"numeric gene {g.name!r} needs lo < hi")
            else:
                raise TypeError(f"unknown gene spec: {g!r}")
        self.schema_id = schema_id
        self.genes = genes

    def __len__(self) -> int:
        return len(self.genes)

    def validate(self, design: Design) -> None:
        """Raise ValueError unless the design satisfies this schema."""
        if design.schema_id != self.schema_id:
            raise ValueError(f"design schema {design.schema_id!r} != {self.schema_id!r}")
        if len(design.genes) != len(self.genes):
            raise ValueError(f"expected {len(self.genes)} genes, got {len(design.genes)}")
        for spec, v in zip(self.genes, design.genes):
            if isinstance(spec, CategoricalGene):
                if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                    raise ValueError(f"gene {spec.name!r}: categorical value must be an option index")
                if not 0 <= v < len(spec.options):
                    raise ValueError(f"gene {spec.name!r}: option index {v} out of range")
            else:
                if isinstance(v, bool) or not isinstance(v, (int, float, np.integer, np.floating)):
                    raise ValueError(f"gene {spec.name!r}: numeric value required, got {v!r}")
                if not np.isfinite(v):
                    raise ValueError(f"gene {spec.name!r}: non-finite value")
                if not spec.lo <= v <= spec.hi:
                    raise ValueError(f"gene {spec.name!r}: {v} outside [{spec.lo}, {spec.hi}]")
                if spec.integer and int(v) != v:
                    raise ValueError(f"gene {spec.name!r}: integer-valued gene got {v}")

    def is_valid(self, design: Design) -> bool:
        try:
            self.validate(design)
        except ValueError:
            return False
        return True

    def sample_gene(self, i: int, rng: np.random.Generator):
        spec = self.genes[i]
        if isinstance(spec, CategoricalGene):
            return int(rng.integers(len(spec.options)))
        if spec.integer:
            return int(rng.integers(int(spec.lo), int(spec.hi) + 1))
        return float(spec.lo + rng.random() * (spec.hi - spec.lo))

    def sample(self, rng: np.random.Generator) -> Design:
        return Design(self.schema_id, tuple(self.sample_gene(i, rng) for i in range(len(self.genes))))

    def default_design(self) -> Design:
        """Bootstrap design: first option per categorical, midpoint per numeric."""
        vals = []
        for spec in self.genes:
            if isinstance(spec, CategoricalGene):
                vals.append(0)
            elif spec.integer:
                vals.append(int(round((spec.lo + spec.hi) / 2.0)))
            else:
                vals.append((spec.lo + spec.hi) / 2.0)
        return Design(self.schema_id, tuple(vals))

    def clamp(self, design: Design) -> Design:
        """Snap a possibly out-of-domain design onto the schema."""
        vals = []
        for spec, v in zip(self.genes, design.genes):
            if isinstance(spec, CategoricalGene):
                vals.append(int(min(max(int(round(float(v))), 0), len(spec.options) - 1)))
            else:
                x = min(max(float(v), spec.lo), spec.hi)
                vals.append(int(round(x)) if spec.integer else x)
        return Design(self.schema_id, tuple(vals))

    @property
    def encoded_width(self) -> int:
        return sum(len(g.options) if isinstance(g, CategoricalGene) else 1 for g in self.genes)

    def encode(self, design: Design) -> np.ndarray:
        """Fixed-width model input: one-hot categoricals, min-max scaled numerics."""
        self.validate(design)
        out = np.zeros(self.encoded_width)
        pos = 0
        for spec, v in zip(self.genes, design.genes):
            if isinstance(spec, CategoricalGene):
                out[pos + int(v)] = 1.0
                pos += len(spec.options)
            else:
                out[pos] = (float(v) - spec.lo) / (spec.hi - spec.lo)
                pos += 1
        return out

    def to_dict(self) -> dict:
        genes = []
        for g in self.genes:
            if isinstance(g, CategoricalGene):
                genes.append({"kind": "categorical", "name": g.name, "options": list(g.options)})
            else:
                genes.append({"kind": "numeric", "name": g.name, "lo": g.lo, "hi": g.hi,
                              "integer": g.integer})
        return {"schema_id": self.schema_id, "genes": genes}

    @staticmethod
    def from_dict(d: dict) -> "GeneSchema":
        genes: list[GeneSpec] = []
        for g in d["genes"]:
            if g["kind"] == "categorical":
                genes.append(CategoricalGene(g["name"], tuple(g["options"])))
            else:
                genes.append(NumericGene(g["name"], g["lo"], g["hi"], g.get("integer", False)))
        return GeneSchema(d["schema_id"], tuple(genes))
