"""Bayesian nonparametric multi-object tracking.

Two trackers built on random-partition priors: a dependent Dirichlet
process mixture (``ddp``) and a dependent Pitman-Yor mixture (``dpy``),
both fitted by Gibbs sweeps over per-measurement cluster assignments.
Supporting pieces: exchangeable-partition math (``partitions``),
conjugate Gaussian and kinematic models (``models``), scenario
simulation (``simulate``), OSPA scoring (``metrics``) and an experiment
runner with a command line front end (``experiment``, ``cli``).
"""

__version__ = "0.1.0"
