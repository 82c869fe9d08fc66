import numpy as np
import pytest

from flipperbot.config import load_config
from flipperbot.world.state import Imu, SensorFrame


@pytest.fixture(scope="session")
def cfg():
    return load_config()


def make_frame(target_ids: np.ndarray, t: float = 0.0, frame_index: int = 0,
               intensity: np.ndarray = None) -> SensorFrame:
    """Minimal sensor frame for tracker/backend tests."""
    ids = np.asarray(target_ids, dtype=np.int16)
    if intensity is None:
        intensity = np.where(ids > 0, 200, 30).astype(np.uint8)
    return SensorFrame(
        t=t,
        frame_index=frame_index,
        depth_m=1.0,
        imu=Imu(quat=np.array([1.0, 0, 0, 0]), angvel=np.zeros(3),
                accel=np.zeros(3)),
        intensity=intensity,
        target_ids=ids,
    )
