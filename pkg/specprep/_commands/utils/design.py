"""Blocked randomization of samples to plates and confounding diagnostics."""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import chi2_contingency

from specprep.exceptions import ConfigError, DesignError

from .iohelper import PathLike, read_table, write_frame

Labels = Tuple[str, ...]

CASE = "case"
CONTROL = "control"

VERDICT_OK = "ok"
VERDICT_WARNING = "warning"
VERDICT_PERFECT = "perfect_confounding"

CRAMERS_V_WARNING = 0.5

# (plate, n_cases, n_controls)
PlateLayout = Tuple[Tuple[int, int, int], ...]


@dataclass(frozen=True)
class SampleRoster:
    sample_ids: Labels
    group: Labels
    stratum: Optional[Labels] = None

    def __post_init__(self):
        sample_ids = tuple(str(label) for label in self.sample_ids)
        group = tuple(str(label) for label in self.group)
        if not sample_ids:
            raise DesignError("The roster is empty.")
        if len(group) != len(sample_ids):
            raise DesignError(f"{len(group)} group labels for {len(sample_ids)} samples.")
        if len(set(sample_ids)) != len(sample_ids):
            raise DesignError("Sample ids in a roster must be unique.")
        object.__setattr__(self, "sample_ids", sample_ids)
        object.__setattr__(self, "group", group)
        if self.stratum is not None:
            stratum = tuple(str(label) for label in self.stratum)
            if len(stratum) != len(sample_ids):
                raise DesignError(f"{len(stratum)} stratum labels for {len(sample_ids)} samples.")
            object.__setattr__(self, "stratum", stratum)

    def __len__(self) -> int:
        return len(self.sample_ids)

    @property
    def groups(self) -> List[str]:
        return sorted(set(self.group))


@dataclass(frozen=True)
class PlateAssignment:
    plate_of: Mapping[str, int]
    n_plates: int

    def __post_init__(self):
        if self.n_plates < 1:
            raise DesignError(f"n_plates must be at least 1, got {self.n_plates}.")
        plate_of = {str(sample): int(plate) for sample, plate in self.plate_of.items()}
        outside = [sample for sample, plate in plate_of.items() if not 1 <= plate <= self.n_plates]
        if outside:
            raise DesignError(
                f"Sample `{outside[0]}` is not assigned to a plate in [1, {self.n_plates}]."
            )
        object.__setattr__(self, "plate_of", plate_of)

    def plate_sizes(self) -> List[int]:
        sizes = np.bincount(list(self.plate_of.values()), minlength=self.n_plates + 1)
        return sizes[1:].tolist()


@dataclass(frozen=True)
class ConfoundingReport:
    plates: Tuple[int, ...]
    groups: Tuple[str, ...]
    counts: Tuple[Tuple[int, ...], ...]
    single_group_batches: int
    chi2: float
    dof: int
    cramers_v: float
    verdict: str

    @property
    def plate_sizes(self) -> List[int]:
        return [sum(row) for row in self.counts]

    @property
    def group_totals(self) -> Dict[str, int]:
        return {group: sum(row[k] for row in self.counts) for k, group in enumerate(self.groups)}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "plates": list(self.plates),
            "groups": list(self.groups),
            "counts": [list(row) for row in self.counts],
            "plate_sizes": self.plate_sizes,
            "group_totals": self.group_totals,
            "single_group_batches": self.single_group_batches,
            "n_batches": len(self.plates),
            "chi2": self.chi2,
            "dof": self.dof,
            "cramers_v": self.cramers_v,
            "verdict": self.verdict,
        }


#########################
# Blocked randomization #
#########################


def block_randomize(roster: SampleRoster, n_plates: int, seed: int) -> PlateAssignment:
    """Assign every (group x stratum) cell to plates in near-equal numbers, at random.

    Each cell's size is apportioned over the plates by largest remainder; the equal quotas
    leave ties, so the extra samples go to the plates holding the fewest members of the cell's
    group so far, then the fewest samples overall, then a random plate. Cell members are
    shuffled and dealt to the plates in that apportionment.
    """
    if n_plates < 1:
        raise DesignError(f"n_plates must be at least 1, got {n_plates}.")
    if n_plates > len(roster):
        raise DesignError(f"Cannot fill {n_plates} plates with {len(roster)} samples.")
    if not 0 <= seed < 2**64:
        raise DesignError("seed must be a 64-bit unsigned integer.")
    rng = np.random.default_rng(seed)

    strata = roster.stratum or ("",) * len(roster)
    cells: Dict[Tuple[str, str], List[int]] = {}
    for index, key in enumerate(zip(roster.group, strata)):
        cells.setdefault(key, []).append(index)

    plate_totals = np.zeros(n_plates, dtype=int)
    group_totals = {group: np.zeros(n_plates, dtype=int) for group in roster.groups}
    plate_of: Dict[str, int] = {}
    for key in sorted(cells):
        members = cells[key]
        base, extra = divmod(len(members), n_plates)
        quota = np.full(n_plates, base)
        if extra:
            tie_break = rng.random(n_plates)
            preference = np.lexsort((tie_break, plate_totals, group_totals[key[0]]))
            quota[preference[:extra]] += 1
        dealt = np.repeat(np.arange(n_plates), quota)
        for member, plate in zip(rng.permutation(members), dealt):
            plate_of[roster.sample_ids[member]] = int(plate) + 1
        plate_totals += quota
        group_totals[key[0]] += quota

    ordered = {sample: plate_of[sample] for sample in roster.sample_ids}
    return PlateAssignment(plate_of=ordered, n_plates=n_plates)


###########################
# Confounding diagnostics #
###########################


def contingency_table(assignment: PlateAssignment, roster: SampleRoster) -> pd.DataFrame:
    missing = [sample for sample in roster.sample_ids if sample not in assignment.plate_of]
    extra = sorted(set(assignment.plate_of) - set(roster.sample_ids))
    if missing or extra:
        detail = []
        if missing:
            detail.append(f"{len(missing)} roster sample(s) unassigned (first `{missing[0]}`)")
        if extra:
            detail.append(f"{len(extra)} assigned sample(s) not in the roster (first `{extra[0]}`)")
        raise DesignError("Assignment does not match the roster: " + "; ".join(detail) + ".")
    plates = [assignment.plate_of[sample] for sample in roster.sample_ids]
    # Empty plates carry no information and are left out of the table.
    return pd.crosstab(
        pd.Series(plates, name="plate"), pd.Series(roster.group, name="group")
    ).sort_index()


def cramers_v(table: pd.DataFrame) -> Tuple[float, float, int]:
    """Cramer's V of a plate x group table, without continuity correction."""
    observed = table.to_numpy(dtype=float)
    rows, columns = observed.shape
    if min(rows, columns) < 2:
        return 0.0, 0.0, 0
    chi2, _, dof, _ = chi2_contingency(observed, correction=False)
    value = np.sqrt(chi2 / (observed.sum() * (min(rows, columns) - 1)))
    return float(min(max(value, 0.0), 1.0)), float(chi2), int(dof)


def diagnose(
    assignment: PlateAssignment, roster: SampleRoster, threshold: float = CRAMERS_V_WARNING
) -> ConfoundingReport:
    table = contingency_table(assignment, roster)
    counts = table.to_numpy(dtype=int)
    single_group = int(((counts > 0).sum(axis=1) == 1).sum())
    value, chi2, dof = cramers_v(table)
    if single_group == counts.shape[0]:
        verdict = VERDICT_PERFECT
    elif single_group > 0 or value > threshold:
        verdict = VERDICT_WARNING
    else:
        verdict = VERDICT_OK
    return ConfoundingReport(
        plates=tuple(int(plate) for plate in table.index),
        groups=tuple(str(group) for group in table.columns),
        counts=tuple(tuple(int(count) for count in row) for row in counts),
        single_group_batches=single_group,
        chi2=chi2,
        dof=dof,
        cramers_v=value,
        verdict=verdict,
    )


####################
# Plate layouts #
####################


def roster_from_layout(
    layout: Sequence[Tuple[int, int, int]],
    case_strata: Optional[Sequence[Sequence[int]]] = None,
) -> Tuple[SampleRoster, PlateAssignment]:
    """Expand (plate, n_cases, n_controls) rows into a roster and its plate assignment.

    `case_strata`, when given, holds per plate the number of cases in each stratum
    (stratum labels 1..k); controls get stratum `-`.
    """
    sample_ids: List[str] = []
    groups: List[str] = []
    strata: List[str] = []
    plate_of: Dict[str, int] = {}
    for position, (plate, n_cases, n_controls) in enumerate(layout):
        labels: List[str] = []
        if case_strata is not None:
            split = case_strata[position]
            if sum(split) != n_cases:
                raise DesignError(f"Plate {plate}: stratum counts do not add up to {n_cases}.")
            for stratum, count in enumerate(split, start=1):
                labels += [str(stratum)] * count
        else:
            labels = [""] * n_cases
        rows = [(CASE, label) for label in labels] + [(CONTROL, "-")] * n_controls
        for number, (group, stratum) in enumerate(rows, start=1):
            sample = f"P{plate:02d}-{number:03d}"
            sample_ids.append(sample)
            groups.append(group)
            strata.append(stratum)
            plate_of[sample] = plate
    n_plates = max(plate for plate, _, _ in layout)
    roster = SampleRoster(
        tuple(sample_ids), tuple(groups), tuple(strata) if case_strata is not None else None
    )
    return roster, PlateAssignment(plate_of=plate_of, n_plates=n_plates)


# Six-plate case-control study: all cases thawed and plated first, controls afterwards.
SEQUENTIAL_CASE_CONTROL: PlateLayout = (
    (1, 59, 0),
    (2, 58, 0),
    (3, 58, 0),
    (4, 0, 81),
    (5, 0, 81),
    (6, 0, 80),
)

# Three-plate block-randomized design with cases balanced over four disease stages.
STAGED_BLOCK_DESIGN: PlateLayout = ((1, 22, 17), (2, 22, 17), (3, 19, 16))
STAGED_BLOCK_CASE_STAGES = ((4, 10, 4, 4), (4, 10, 4, 4), (3, 8, 4, 4))

# Glycomics study: 34 plates filled as samples became available.
GLYCOMICS_LAYOUT: PlateLayout = tuple(
    (plate, cases, controls)
    for plate, (cases, controls) in enumerate(
        (
            (4, 0), (3, 0), (11, 0), (5, 0), (12, 0), (21, 40), (1, 3), (2, 0), (16, 13),
            (0, 15), (1, 3), (0, 9), (4, 0), (1, 0), (1, 0), (1, 0), (2, 0), (0, 4), (0, 3),
            (0, 16), (0, 15), (1, 0), (3, 0), (0, 4), (1, 0), (0, 5), (1, 9), (2, 8), (0, 4),
            (2, 14), (1, 6), (1, 9), (0, 7), (0, 4),
        ),
        start=1,
    )
)  # fmt: skip


###################
# Roster file I/O #
###################


def load_roster(path: PathLike) -> SampleRoster:
    frame = read_table(path, required=("id", "group"), optional=("stratum",))
    if frame.empty:
        raise DesignError(f"The roster `{path}` is empty.")
    stratum = tuple(frame["stratum"]) if "stratum" in frame.columns else None
    return SampleRoster(tuple(frame["id"]), tuple(frame["group"]), stratum)


def load_assignment(path: PathLike) -> PlateAssignment:
    frame = read_table(path, required=("id", "plate"))
    try:
        plates = [int(plate) for plate in frame["plate"]]
    except ValueError as error:
        raise ConfigError(path, f"Plate numbers must be integers. {error}")
    if not plates:
        raise DesignError(f"The assignment `{path}` is empty.")
    repeated = sorted(frame["id"][frame["id"].duplicated()].unique())
    if repeated:
        raise DesignError(f"Sample(s) assigned more than once in `{path}`: {', '.join(repeated)}")
    return PlateAssignment(plate_of=dict(zip(frame["id"], plates)), n_plates=max(plates))


def save_roster(roster: SampleRoster, path: PathLike) -> Path:
    columns: Dict[str, Any] = {"id": list(roster.sample_ids), "group": list(roster.group)}
    if roster.stratum is not None:
        columns["stratum"] = list(roster.stratum)
    return write_frame(path, pd.DataFrame(columns))


def save_assignment(assignment: PlateAssignment, path: PathLike) -> Path:
    frame = pd.DataFrame(
        {"id": list(assignment.plate_of), "plate": list(assignment.plate_of.values())}
    )
    return write_frame(path, frame)
