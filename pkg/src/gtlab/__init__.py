"""gtlab: a desk-scale graphics Turing lab.

Four cooperating pieces:

* ``gtlab.render`` -- a small deterministic Monte Carlo path tracer that
  produces synthetic stimuli and a measurable per-frame cost.
* ``gtlab.scale`` -- arithmetic from measured single-CPU frame time to the
  processor count and peak/sustained TFlops needed for interactive rates.
* ``gtlab.distsim`` -- a discrete-event simulator of one frame rendered in
  parallel on archetypal large machines, yielding frame time and efficiency.
* ``gtlab.protocol`` -- the forced-choice discrimination test: trial plans,
  response recording, exact binomial analysis, and simulated observers.

``gtlab.harness`` ties them together behind a CLI and a small HTTP service.
"""

__version__ = "0.1.0"
