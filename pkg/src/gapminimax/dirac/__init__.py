"""Radial Dirac-Coulomb channels as form pairs."""
from .basis import RadialBasis
from .channel import KappaChannel, assemble_channel, assemble_coulomb, h_half_metric, p_split, t_split
from .oracle import CouplingRegime, regime_classify, shooting_levels, sommerfeld_oracle
from .solve import ChannelSolution, epsilon_continuation, kato_certificate, solve_channel

__all__ = [
    "RadialBasis", "KappaChannel", "assemble_channel", "assemble_coulomb", "h_half_metric",
    "p_split", "t_split", "CouplingRegime", "regime_classify", "shooting_levels",
    "sommerfeld_oracle", "ChannelSolution", "epsilon_continuation", "kato_certificate",
    "solve_channel",
]
