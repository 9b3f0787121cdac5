"""Shared default hyperparameters and limits used across modules."""

# Reward table defaults (see world.RewardConfig).
MOVE_REWARD = -0.3
STAY_OFF_GOAL_REWARD = -0.5
STAY_ON_GOAL_REWARD = 0.0
COLLISION_REWARD = -2.0
BLOCKING_REWARD = -2.0
FINISH_REWARD = 20.0
BLOCKING_DELAY_THRESHOLD = 10

# Observation defaults.
FOV = 10
BENCH_DISTANCE_CAP = 75.0

# Training-loop defaults exposed for learner integrations.
GAMMA = 0.95
ENTROPY_WEIGHT = 0.01
EPISODE_LENGTH = 256
BATCH_SIZE = 128
DEMO_PROBABILITY = 0.5

# Expert demonstration inflation factor.
DEMO_EPSILON = 2.0

# Solver wall-clock timeouts (seconds).
CBS_TIMEOUT = 300.0
MSTAR_TIMEOUT = 60.0

# Episode step caps by world size (max of width/height).
def step_cap_for_size(size: int) -> int:
    if size <= 40:
        return 256
    if size <= 80:
        return 384
    return 512


# Benchmark grid defaults.
BENCH_SIZES = (10, 20, 40, 80, 160)
BENCH_DENSITIES = (0.0, 0.1, 0.2, 0.3)
BENCH_TEAM_SIZES = (4, 8, 16, 32, 64, 128, 256, 512, 1024)
BENCH_INSTANCES_PER_CELL = 25


def team_cap_for_size(size: int) -> int:
    """Largest team placed in a world of the given size."""
    if size <= 10:
        return 32
    if size <= 20:
        return 128
    return 1024
