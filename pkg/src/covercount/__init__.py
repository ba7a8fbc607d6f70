"""Private counting with sampled two-round responses and non-attributable writes.

The package is organized as a pipeline:

- :mod:`covercount.field` -- prime-field scalars and packed bitstrings.
- :mod:`covercount.mechanisms` -- local privatization (randomized response and
  the two-round sampling mechanisms), their estimators, leakage calculators,
  and grid discretization.
- :mod:`covercount.privwrite` -- non-attributable database writes: the plain
  XOR-sharing scheme and the seed-compressed point-function sharing scheme.
- :mod:`covercount.verify` -- blinded-share verification that each write is a
  unit vector.
- :mod:`covercount.harness` -- end-to-end epoch simulation.
- :mod:`covercount.cli` -- the ``covercount`` command.

The cryptography is simulation-grade: it demonstrates the protocols but makes
no side-channel or deployment-hardening claims.
"""

__version__ = "0.1.0"
