"""
Majlab Configuration

Every tunable default of the library and the CLI.
"""

from pydantic import Field
from core import RunConfig


class MajlabConfig(RunConfig):
    """
    Majlab run configuration.

    Inherited from RunConfig:
        - seed: int             # one seeded PRNG for the whole run, 0 by default
        - backend: str          # auto | exact | float
        - tol: float            # float feasibility tolerance
        - out: Optional[Path]   # report file, stdout when unset
        - threads: int          # worker cap, from MAJLAB_THREADS
        - timing: bool          # fill in wall_time
    """

    # ══════════════════════════════════════════════════════════════════════════
    #  BACKENDS
    # ══════════════════════════════════════════════════════════════════════════

    exact_size_limit: int = Field(
        default=1000,
        description="Auto backend stays exact while atoms x dimension is at most this"
    )

    zero_threshold: float = Field(
        default=1e-12,
        description="Float entries below this count as zero in Birkhoff matching"
    )

    unitary_tol: float = Field(
        default=1e-10,
        description="Largest accepted unitarity defect of a synthesized unitary"
    )

    # ══════════════════════════════════════════════════════════════════════════
    #  II1 ENGINES
    # ══════════════════════════════════════════════════════════════════════════

    depth: int = Field(
        default=12,
        description="Induction levels run by the scalar engine ((2/3)^12 < 0.008)"
    )

    finalize: bool = Field(
        default=True,
        description="Flatten the residual corner with a Fourier block after the last level"
    )

    block_depth: int = Field(
        default=0,
        description="Induction levels used inside nested blocks; 0 flattens them with Fourier"
    )

    max_resolution: int = Field(
        default=5000,
        description="Upper bound for automatically chosen resolutions"
    )

    # ══════════════════════════════════════════════════════════════════════════
    #  B(H) SYNTHESIS
    # ══════════════════════════════════════════════════════════════════════════

    max_step2_denominator: int = Field(
        default=64,
        description="Largest a+b tried when writing d as a rational mix of e and f"
    )

    enforce_multiplicity_floor: bool = Field(
        default=True,
        description="Refuse syntheses that give a vertex fewer than ceil(M/(4k)) cells"
    )

    # ══════════════════════════════════════════════════════════════════════════
    #  PROPERTY PROBES
    # ══════════════════════════════════════════════════════════════════════════

    probe_samples: int = Field(
        default=100,
        description="Random convex functions drawn by the convex inequality probe"
    )

    inflate_eps: float = Field(
        default=1e-2,
        description="Target deviation for approximate inflation"
    )
