"""
Nash feedback equilibria for one-dimensional, two-player discounted differential games.

Modules:
  game_model          games, cost families, assumption checks, regime classification
  hj_system           pointwise algebra of the Hamilton-Jacobi system
  equilibrium_solver  constructions of admissible solutions and their audit
  phase_plane         the rescaled planar gradient flow
  game_simulator      closed-loop trajectories and discounted costs
  nash_verifier       dynamic-programming check of the no-profitable-deviation property
  io / cli            persistence and the command-line surface
"""

__version__ = "0.1.0"
