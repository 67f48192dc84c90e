"""Localization availability by observation/unknown counting."""

from dataclasses import dataclass


@dataclass(frozen=True)
class AvailabilityResult:
    n_obs: int
    n_unknowns: int

    @property
    def localizable(self) -> bool:
        return self.n_obs >= self.n_unknowns

    def cell(self) -> str:
        text = f"({self.n_obs},{self.n_unknowns})"
        return text if self.localizable else f"~{text}~"


def assess(N: int, L: int) -> AvailabilityResult:
    """Count DD code+phase (2(N-1)) plus 3 per 5G BS against
    position (3), DD ambiguities (N-1) and one 5G clock bias when L >= 1."""
    if N < 0 or L < 0:
        raise ValueError("N and L must be non-negative")
    n_dd = max(N - 1, 0)
    return AvailabilityResult(2 * n_dd + 3 * L, 3 + n_dd + (1 if L >= 1 else 0))


def availability_table(N_values=range(6), L_values=(0, 1)):
    return {(N, L): assess(N, L) for L in L_values for N in N_values}


def format_table(N_values=range(6), L_values=(0, 1)) -> str:
    """Grid of (n_obs, n_unknowns); nonlocalizable cells wrapped in ``~``."""
    N_values = list(N_values)
    rows = ["L\\N\t" + "\t".join(str(N) for N in N_values)]
    for L in L_values:
        rows.append(f"{L}\t" + "\t".join(assess(N, L).cell() for N in N_values))
    return "\n".join(rows)
