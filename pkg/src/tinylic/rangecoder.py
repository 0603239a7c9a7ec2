"""Bit-exact integer range coder over cumulative frequency tables.

A 32-bit-range, byte-renormalizing coder with 16-bit cumulative precision
(table totals are always 65536). The encoder keeps ``low`` in 64 bits so
carries are handled by deferred byte emission rather than bit stuffing:
0xFF bytes are held back until a non-0xFF byte (or a carry) resolves them.
Renormalization keeps range >= 2^24, so range >> 16 never underflows.

Flushing forces out the final 32-bit low exactly, which costs 4 bytes; an
empty stream is exactly 4 bytes. The coder performs no floating-point
operation anywhere.
"""

import numpy as np

from . import _kernels
from .entropy import CDF_TOTAL, CdfTable
from .errors import CorruptStreamError, InputError


def _stack_rows(tables, n):
    """Normalize the tables argument to an (n, M+1) int64 matrix."""
    if isinstance(tables, CdfTable):
        return np.broadcast_to(tables.cum, (n, tables.cum.shape[0]))
    if isinstance(tables, np.ndarray) and tables.ndim == 2:
        if tables.shape[0] != n:
            raise InputError(f"need {n} cdf rows, got {tables.shape[0]}")
        return tables
    tables = list(tables)
    if len(tables) != n:
        raise InputError(f"need {n} cdf tables, got {len(tables)}")
    width = {t.cum.shape[0] for t in tables}
    if len(width) != 1:
        raise InputError("all cdf tables in one stream must have equal size")
    return np.stack([t.cum for t in tables])


def rc_encode(symbols, tables):
    """Encode symbol indices under their tables; returns the byte stream.

    symbols: sequence of symbol indices (0-based). tables: one CdfTable
    shared by all symbols, a list with one CdfTable per symbol, or a
    prebuilt (N, M+1) int64 row matrix.
    """
    symbols = np.asarray(symbols, dtype=np.int64).ravel()
    rows = _stack_rows(tables, symbols.shape[0])
    if symbols.shape[0]:
        m = rows.shape[1] - 1
        if symbols.min() < 0 or symbols.max() >= m:
            raise InputError(
                f"symbol index out of range [0, {m}) for the supplied tables"
            )
    return _kernels.rc_encode_bytes(symbols, rows)


def rc_decode(data, tables, n):
    """Decode exactly n symbol indices from a stream.

    Tables must be supplied in the same order used for encoding. Raises
    CorruptStreamError on truncation or an out-of-range cumulative lookup.
    """
    n = int(n)
    rows = _stack_rows(tables, n)
    symbols, consumed, ok = _kernels.rc_decode_syms(data, rows, n)
    if not ok:
        raise CorruptStreamError(
            f"range-coded stream corrupt or truncated at byte {consumed}"
        )
    return symbols


def stream_overhead_bits(num_streams):
    """Worst-case flush overhead the coder adds per stream."""
    return 32 * int(num_streams)


def check_total(tables):
    """Assert every table totals 2^16 (the coder's fixed precision)."""
    if isinstance(tables, CdfTable):
        tables = [tables]
    for t in tables:
        if int(t.cum[-1]) != CDF_TOTAL:
            raise InputError("cdf table total must be 65536")
