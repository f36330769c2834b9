"""Transaction multigraph: ingestion, filtering and adjacency views."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from functools import cached_property
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .benford import first_digit

logger = logging.getLogger(__name__)

NO_TIMESTAMP = np.iinfo(np.int64).min


class GraphFormatError(ValueError):
    """A CSV row could not be parsed."""


class EmptyGraphError(ValueError):
    """No transaction survived ingestion filtering."""


class Transaction(NamedTuple):
    src: int
    dst: int
    amount: float
    timestamp: int | None = None


@dataclass(frozen=True)
class IngestConfig:
    min_value: float = 1.0
    delimiter: str = ","
    allow_self_loops: bool = False
    # None: sniff the first row (a non-numeric value column means header).
    header: bool | None = None


@dataclass(frozen=True, eq=False)
class TransactionGraph:
    """Directed multigraph; arc ``i`` is the transaction ``src[i] -> dst[i]``.

    Node ids are dense integers ``0..n-1``; ``keys[i]`` is the external key
    of node ``i``. ``digit`` holds the first significant digit of each
    amount, extracted from its decimal text at load time.
    """

    keys: Sequence[str]
    src: np.ndarray
    dst: np.ndarray
    amount: np.ndarray
    digit: np.ndarray
    timestamp: np.ndarray | None = None
    amount_text: Sequence[str] | None = None
    dropped_self_loops: int = 0
    dropped_below_min: int = 0
    dropped_nonpositive: int = 0

    @classmethod
    def from_arrays(
        cls,
        keys: Sequence[str],
        src,
        dst,
        amount,
        digit=None,
        timestamp=None,
        amount_text=None,
    ) -> "TransactionGraph":
        src = np.ascontiguousarray(src, dtype=np.int64)
        dst = np.ascontiguousarray(dst, dtype=np.int64)
        amount = np.ascontiguousarray(amount, dtype=np.float64)
        n = len(keys)
        if not (len(src) == len(dst) == len(amount)):
            raise ValueError("src, dst and amount must have equal length")
        if len(src) and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
            raise ValueError("arc endpoint outside [0, n)")
        if np.any(amount <= 0):
            raise ValueError("amounts must be positive")
        if digit is None:
            source = amount_text if amount_text is not None else amount.tolist()
            digit = np.fromiter((first_digit(a) for a in source), dtype=np.uint8, count=len(amount))
        digit = np.ascontiguousarray(digit, dtype=np.uint8)
        if timestamp is not None:
            timestamp = np.ascontiguousarray(timestamp, dtype=np.int64)
        return cls(list(keys), src, dst, amount, digit, timestamp, amount_text)

    @property
    def n(self) -> int:
        return len(self.keys)

    @property
    def num_transactions(self) -> int:
        return len(self.src)

    @cached_property
    def key_to_id(self) -> dict[str, int]:
        return {k: i for i, k in enumerate(self.keys)}

    @cached_property
    def degrees(self) -> np.ndarray:
        """Incident transactions per node, both directions (self-loops count twice)."""
        return np.bincount(self.src, minlength=self.n) + np.bincount(self.dst, minlength=self.n)

    @cached_property
    def incidence(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR ``(indptr, arc_ids)``: arcs touching node ``u`` are
        ``arc_ids[indptr[u]:indptr[u+1]]``."""
        ends = np.concatenate([self.src, self.dst])
        arcs = np.concatenate([np.arange(self.num_transactions)] * 2)
        order = np.argsort(ends, kind="stable")
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(ends, minlength=self.n), out=indptr[1:])
        return indptr, arcs[order]

    def _check_node(self, u: int) -> None:
        if not 0 <= u < self.n:
            raise IndexError(f"node id {u} outside [0, {self.n})")

    def degree(self, u: int) -> int:
        self._check_node(u)
        return int(self.degrees[u])

    def incident_arcs(self, u: int) -> np.ndarray:
        self._check_node(u)
        indptr, arcs = self.incidence
        return arcs[indptr[u] : indptr[u + 1]]

    def node_mask(self, nodes: Iterable[int]) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        idx = np.fromiter(nodes, dtype=np.int64) if not isinstance(nodes, np.ndarray) else nodes
        if len(idx):
            mask[idx] = True
        return mask

    def induced_arcs(self, nodes) -> np.ndarray:
        """Indices of all arcs with both endpoints in ``nodes``."""
        mask = self.node_mask(nodes)
        return np.flatnonzero(mask[self.src] & mask[self.dst])

    def transaction(self, i: int) -> Transaction:
        ts = None
        if self.timestamp is not None and self.timestamp[i] != NO_TIMESTAMP:
            ts = int(self.timestamp[i])
        return Transaction(int(self.src[i]), int(self.dst[i]), float(self.amount[i]), ts)

    def induced_transactions(self, nodes) -> list[Transaction]:
        return [self.transaction(i) for i in self.induced_arcs(nodes)]

    def distinct_edge_counts(self) -> tuple[int, int]:
        """Number of distinct (directed, undirected) node pairs carrying a transaction."""
        n = np.int64(max(self.n, 1))
        directed = np.unique(self.src * n + self.dst).size
        lo = np.minimum(self.src, self.dst)
        hi = np.maximum(self.src, self.dst)
        undirected = np.unique(lo * n + hi).size
        return int(directed), int(undirected)

    def subgraph(self, nodes) -> "TransactionGraph":
        """Induced subgraph on ``nodes``, re-indexed in ascending id order.

        The new node ``i`` is old node ``sorted(nodes)[i]``.
        """
        keep = np.unique(np.asarray(list(nodes) if not isinstance(nodes, np.ndarray) else nodes, dtype=np.int64))
        remap = np.full(self.n, -1, dtype=np.int64)
        remap[keep] = np.arange(keep.size)
        arcs = np.flatnonzero((remap[self.src] >= 0) & (remap[self.dst] >= 0))
        return TransactionGraph(
            keys=[self.keys[i] for i in keep],
            src=remap[self.src[arcs]],
            dst=remap[self.dst[arcs]],
            amount=self.amount[arcs],
            digit=self.digit[arcs],
            timestamp=None if self.timestamp is None else self.timestamp[arcs],
            amount_text=None if self.amount_text is None else [self.amount_text[i] for i in arcs],
        )

    def amount_strings(self) -> list[str]:
        if self.amount_text is not None:
            return list(self.amount_text)
        return [repr(a) for a in self.amount.tolist()]

    def to_csv(self, path: str | Path, delimiter: str = ",") -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
            has_ts = self.timestamp is not None
            writer.writerow(["src", "dst", "value"] + (["timestamp"] if has_ts else []))
            keys = self.keys
            texts = self.amount_strings()
            for i, (u, v) in enumerate(zip(self.src.tolist(), self.dst.tolist())):
                row = [keys[u], keys[v], texts[i]]
                if has_ts:
                    ts = int(self.timestamp[i])
                    row.append("" if ts == NO_TIMESTAMP else str(ts))
                writer.writerow(row)


def _is_number(text: str) -> bool:
    try:
        return Decimal(text.strip()).is_finite()
    except InvalidOperation:
        return False


def load_csv(path: str | Path, config: IngestConfig = IngestConfig()) -> TransactionGraph:
    """Read ``src,dst,value[,timestamp]`` rows into a :class:`TransactionGraph`.

    Rows with ``value < config.min_value`` or ``src == dst`` (unless
    self-loops are allowed) are dropped and counted. Raises
    :class:`GraphFormatError` with the offending line number on a malformed
    row and :class:`EmptyGraphError` when nothing survives.
    """
    if config.min_value < 0:
        raise ValueError("min_value must be >= 0")
    min_value = Decimal(str(config.min_value))
    key_to_id: dict[str, int] = {}
    keys: list[str] = []
    src: list[int] = []
    dst: list[int] = []
    texts: list[str] = []
    digits: list[int] = []
    stamps: list[int] = []
    any_ts = False
    below = loops = nonpos = 0

    def node(key: str) -> int:
        i = key_to_id.get(key)
        if i is None:
            i = key_to_id[key] = len(keys)
            keys.append(key)
        return i

    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=config.delimiter)
        first = True
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if first:
                first = False
                header = config.header
                if header is None:
                    header = len(row) >= 3 and not _is_number(row[2])
                if header:
                    continue
            if len(row) not in (3, 4):
                raise GraphFormatError(f"line {lineno}: expected 3 or 4 fields, got {len(row)}")
            a_key, b_key, text = row[0].strip(), row[1].strip(), row[2].strip()
            try:
                value = Decimal(text)
            except InvalidOperation:
                raise GraphFormatError(f"line {lineno}: unparsable value {text!r}") from None
            if not value.is_finite():
                raise GraphFormatError(f"line {lineno}: non-finite value {text!r}")
            ts = NO_TIMESTAMP
            if len(row) == 4 and row[3].strip():
                try:
                    ts = int(row[3].strip())
                except ValueError:
                    raise GraphFormatError(f"line {lineno}: unparsable timestamp {row[3]!r}") from None
                any_ts = True
            if not a_key or not b_key:
                raise GraphFormatError(f"line {lineno}: empty node key")
            if value < min_value:
                below += 1
                continue
            if value <= 0:
                nonpos += 1
                continue
            if a_key == b_key and not config.allow_self_loops:
                loops += 1
                continue
            src.append(node(a_key))
            dst.append(node(b_key))
            texts.append(text)
            digits.append(first_digit(text))
            stamps.append(ts)

    if nonpos:
        logger.warning("dropped %d rows with non-positive amount", nonpos)
    if loops:
        logger.info("dropped %d self-loop transactions", loops)
    if below:
        logger.info("dropped %d transactions below min_value=%s", below, config.min_value)
    if not src:
        raise EmptyGraphError(f"empty graph: no transactions kept from {path}")
    return TransactionGraph(
        keys=keys,
        src=np.array(src, dtype=np.int64),
        dst=np.array(dst, dtype=np.int64),
        amount=np.array([float(t) for t in texts]),
        digit=np.array(digits, dtype=np.uint8),
        timestamp=np.array(stamps, dtype=np.int64) if any_ts else None,
        amount_text=texts,
        dropped_self_loops=loops,
        dropped_below_min=below,
        dropped_nonpositive=nonpos,
    )
