"""failaudit: deterministic scanner for failure-untruthful code patterns.

Audits source for code that conceals, degrades or misrepresents its own
failure state: swallowed exceptions, success returned after failure, silent
audit loss, unsupervised background work, untested failure paths, and the
rest of a fifteen-check catalog. The deterministic engine is the baseline;
model-assisted evaluation is optional enrichment and can never remove a
deterministic finding.
"""

__version__ = "0.1.0"
