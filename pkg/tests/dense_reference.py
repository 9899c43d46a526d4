"""Independent dense statevector simulator used only for cross-checks.

Deliberately implemented with a different representation from the package's
sparse simulator: a flat numpy vector over all 2^total_width basis indices,
bitfield arithmetic for register extraction, butterfly Hadamards, and
index-permutation oracle layers. Nothing here imports from shufflesim.qsim
except the layout geometry.
"""

import numpy as np


class DenseSim:
    def __init__(self, layout):
        self.layout = layout
        self.vec = np.zeros(1 << layout.total_width, dtype=complex)
        self.vec[0] = 1.0
        self._idx = np.arange(self.vec.size)

    def _field(self, name):
        return self.layout.offset(name), self.layout.width(name)

    def reg_values(self, name):
        off, w = self._field(name)
        return (self._idx >> off) & ((1 << w) - 1)

    def init_uniform(self, name):
        off, w = self._field(name)
        vals = self.reg_values(name)
        assert not np.any(self.vec[vals != 0]), "register must be zero before init"
        base = self._idx[vals == 0]
        out = np.zeros_like(self.vec)
        for v in range(1 << w):
            out[base | (v << off)] = self.vec[base] / np.sqrt(1 << w)
        self.vec = out

    def oracle_layer(self, oracle, query_spec):
        # simultaneous read: all answer shifts computed from the pre-layer index
        total_shift = np.zeros_like(self._idx)
        mask = oracle.domain_size - 1
        for level, in_reg, target_reg in query_spec:
            off_t, w_t = self._field(target_reg)
            assert w_t == oracle.answer_bits(level)
            inputs = self.reg_values(in_reg) & mask
            uniq, inverse = np.unique(inputs, return_inverse=True)
            answers = np.asarray(oracle.values_at(level, [int(u) for u in uniq]), dtype=np.int64)
            total_shift = total_shift ^ (answers[inverse] << off_t)
        out = np.zeros_like(self.vec)
        out[self._idx ^ total_shift] = self.vec
        self.vec = out

    def hadamard(self, name):
        off, w = self._field(name)
        for b in range(off, off + w):
            m = 1 << b
            lo = self._idx[(self._idx & m) == 0]
            a, c = self.vec[lo], self.vec[lo | m]
            self.vec[lo] = (a + c) / np.sqrt(2)
            self.vec[lo | m] = (a - c) / np.sqrt(2)

    def outcome_probability(self, name, value):
        return float(np.sum(np.abs(self.vec[self.reg_values(name) == value]) ** 2))

    def project(self, name, value):
        """Force a measurement outcome; renormalize. Returns the outcome prob."""
        p = self.outcome_probability(name, value)
        assert p > 1e-12, "projecting onto a zero-probability outcome"
        keep = self.reg_values(name) == value
        self.vec = np.where(keep, self.vec, 0) / np.sqrt(p)
        return p
