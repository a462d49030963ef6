"""Per-link frequency-slot bookkeeping and first-fit search.

Occupancy is held as one integer bitmask per (link, band): bit i set means
slot i is FREE. First-fit over a path is a bitwise AND of the path masks
followed by a contiguous-run scan, so continuity (same range on every link)
and contiguity (one unbroken range) hold by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import GridStateError

LinkKey = tuple[str, str]


@dataclass(frozen=True)
class BandPlan:
    """Ordered transmission bands; C fills before L."""

    bands: tuple[str, ...]
    slots_per_band: int = 133
    slot_width_ghz: float = 37.5

    @classmethod
    def from_name(cls, name: str, slots_per_band: int = 133, slot_width_ghz: float = 37.5) -> "BandPlan":
        if name == "C":
            return cls(("C",), slots_per_band, slot_width_ghz)
        if name in ("C+L", "CL"):
            return cls(("C", "L"), slots_per_band, slot_width_ghz)
        raise ValueError(f"unknown band plan {name!r} (expected 'C' or 'C+L')")

    @property
    def name(self) -> str:
        return "+".join(self.bands)

    @property
    def total_slots(self) -> int:
        return len(self.bands) * self.slots_per_band


@dataclass(frozen=True)
class SlotRange:
    band: str
    start: int
    length: int

    @property
    def end(self) -> int:
        return self.start + self.length


@dataclass
class Lightpath:
    """An admitted request's path, spectrum and quality snapshot."""

    id: int
    request_id: int
    type_id: str
    path: tuple[str, ...]
    slots: SlotRange
    rate_gbps: float
    min_rate_gbps: float
    gsnr_db: float
    modulation: str
    provisioned_at: float
    expires_at: float

    def __post_init__(self):
        if self.rate_gbps < self.min_rate_gbps:
            raise GridStateError(
                f"lightpath {self.id}: rate {self.rate_gbps} below floor {self.min_rate_gbps}"
            )


class SpectrumGrid:
    """Slot occupancy for every link of one simulation run."""

    def __init__(self, link_keys: list[LinkKey], plan: BandPlan):
        self.plan = plan
        self.links = list(link_keys)
        full = (1 << plan.slots_per_band) - 1
        self._free: dict[tuple[LinkKey, str], int] = {
            (link, band): full for link in self.links for band in plan.bands
        }
        self._occ_count: dict[tuple[LinkKey, str], int] = {k: 0 for k in self._free}
        self._by_owner: dict[int, tuple[list[LinkKey], SlotRange]] = {}
        self.occupied_slot_links = 0

    # -- queries ------------------------------------------------------------

    def is_free(self, link: LinkKey, slots: SlotRange) -> bool:
        mask = ((1 << slots.length) - 1) << slots.start
        return self._free[(link, slots.band)] & mask == mask

    def band_occupancy(self, link: LinkKey, band: str) -> int:
        return self._occ_count[(link, band)]

    def utilization(self) -> float:
        total = len(self.links) * self.plan.total_slots
        return self.occupied_slot_links / total if total else 0.0

    def first_fit(self, path_links: list[LinkKey], n_slots: int) -> SlotRange | None:
        """Lowest free contiguous range of n_slots on every link, C before L."""
        assert n_slots >= 1
        for band in self.plan.bands:
            mask = (1 << self.plan.slots_per_band) - 1
            for link in path_links:
                mask &= self._free[(link, band)]
                if not mask:
                    break
            if not mask:
                continue
            runs = mask
            for shift in range(1, n_slots):
                runs &= mask >> shift
                if not runs:
                    break
            if runs:
                start = (runs & -runs).bit_length() - 1
                if start + n_slots <= self.plan.slots_per_band:
                    return SlotRange(band, start, n_slots)
        return None

    # -- mutation -----------------------------------------------------------

    def allocate(self, lightpath: Lightpath, path_links: list[LinkKey]) -> None:
        slots = lightpath.slots
        if lightpath.id in self._by_owner:
            raise GridStateError(f"lightpath id {lightpath.id} already allocated")
        if slots.end > self.plan.slots_per_band or slots.band not in self.plan.bands:
            raise GridStateError(f"slot range {slots} outside plan {self.plan.name}")
        mask = ((1 << slots.length) - 1) << slots.start
        for link in path_links:
            if self._free[(link, slots.band)] & mask != mask:
                raise GridStateError(
                    f"collision allocating {slots} for lightpath {lightpath.id} on {link}"
                )
        for link in path_links:
            key = (link, slots.band)
            self._free[key] &= ~mask
            self._occ_count[key] += slots.length
        self._by_owner[lightpath.id] = (list(path_links), slots)
        self.occupied_slot_links += slots.length * len(path_links)

    def release(self, lightpath_id: int) -> None:
        try:
            path_links, slots = self._by_owner.pop(lightpath_id)
        except KeyError:
            raise GridStateError(f"release of unknown lightpath id {lightpath_id}") from None
        mask = ((1 << slots.length) - 1) << slots.start
        for link in path_links:
            key = (link, slots.band)
            self._free[key] |= mask
            self._occ_count[key] -= slots.length
        self.occupied_slot_links -= slots.length * len(path_links)

    # -- debugging ----------------------------------------------------------

    def snapshot(self) -> dict[tuple[LinkKey, str], int]:
        """Copy of the free-masks, for bit-exact comparisons in tests."""
        return dict(self._free)

    def owner_rows(self) -> list[tuple[str, str, int, int]]:
        """(link_id, band, slot, owner) rows for every occupied slot."""
        rows = []
        for owner, (path_links, slots) in sorted(self._by_owner.items()):
            for link in path_links:
                for s in range(slots.start, slots.end):
                    rows.append(("-".join(link), slots.band, s, owner))
        rows.sort()
        return rows


def utilization(grid: SpectrumGrid, plan: BandPlan) -> float:
    """Occupied slot-links over total slot-links of the plan."""
    assert plan.total_slots == grid.plan.total_slots
    return grid.utilization()
