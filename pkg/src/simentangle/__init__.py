"""Classical simulation of entangled two-party outcome statistics via k-th root extraction."""

from .modmath import Semiprime, crt_combine, euler_phi, factor_semiprime, gcd, invmod, mulmod, powmod
from .protocol import (
    OUTCOMES,
    PartyResult,
    ProtocolParams,
    REPolicy,
    SessionTranscript,
    attempt_factor,
    ca_setup,
    classify_outcome,
    derive_rng,
    make_params,
    party_submit,
    re_reply,
    recover_secret,
    run_session,
    seeded_session,
)
from .roots import (
    GameSetup,
    RootSet,
    count_kth_roots,
    kth_roots,
    kth_roots_mod_prime,
    kth_roots_mod_semiprime,
    negation_class,
    residue_table,
    validate_setup,
)
from .statekit import (
    OutcomeDistribution,
    TrialCounts,
    chi_square,
    enumerate_distribution,
    marginal_success,
    monte_carlo,
    theorem_state,
)

__version__ = "0.1.0"
