"""Creates a class to store the paths to different files and directories, plus the
numerical parameters shared by the simulation modules."""


import os


class Paths:
    def __init__(self, project_dir):
        self.project_dir = project_dir

    @property
    def output(self):
        return os.path.join(self.project_dir, "output")

    @property
    def scenarios(self):
        return os.path.join(self.project_dir, "scenarios")

    def scenario_file(self, kind: str) -> str:
        """shipped configuration for an experiment kind, e.g. 'monte-carlo'"""
        return os.path.join(self.scenarios, f"{kind}.cfg")


paths = Paths(os.path.dirname(os.path.dirname(__file__)))


# =============================================================================
#  Parameters
# =============================================================================

# tolerances
STRUCTURAL_TOL: float = 1e-12
ORACLE_TOL: float = 1e-6
SIGMA_LEVEL: float = 4.0
SYMMETRY_TOL: float = 1e-12
UNIMODULAR_TOL: float = 1e-12
NORM_TOL: float = 1e-10
EQUIVALENCE_TOL: float = 1e-9

# confidence level for chi-square rms intervals (4-sigma convention)
CI_CONFIDENCE: float = 0.9999

# RNG domain tags, kept in the counter so that streams never collide
RNG_DOMAIN_MEASUREMENT: int = 0
RNG_DOMAIN_SURVIVAL: int = 1

# photon budget
MAX_EPISODE_TRANSMISSIONS: int = 10_000_000
SURVIVAL_CHUNK: int = 4096

# GLM
GLM_MAX_PHOTONS: int = 32
GLM_DEFAULT_EPSILON_FRACTION: float = 0.01

# Schmidt oracle
SCHMIDT_DEFAULT_POINTS: int = 512
SCHMIDT_MAX_POINTS: int = 4096
SCHMIDT_HALF_SPAN_IN_T: float = 8.0
SCHMIDT_POINTS_PER_WIDTH: int = 8

# finite-difference QFI
QFI_STEP_FRACTION: float = 1e-3
QFI_RICHARDSON_TOL: float = 1e-6

# z-scan for the product bound
Z_GRID_POINTS: int = 64
Z_GRID_DECADES: float = 6.0
