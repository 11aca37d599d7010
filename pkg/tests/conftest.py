import numpy as np
import pytest

from magtorsion import CoilParams, MagnetGeometry, MechanicalParams, RingdownModal, normalize_params

# Identified device parameters used throughout: rotor inertia, viscous and
# dry damping, spring amplitude, and the drive-coil electrical constants.
TABLE_J = 8.99e-6
TABLE_C = 3.17e-6
TABLE_TF = 8.54e-5
TABLE_TAMP = 0.484
TABLE_R = 1.76
TABLE_L = 1.83e-3
TABLE_KT = 9.41e-3
TABLE_KEMF = 9.41e-3


@pytest.fixture
def mech():
    return MechanicalParams(inertia=TABLE_J, viscous_c=TABLE_C,
                            dry_tf=TABLE_TF, spring_tamp=TABLE_TAMP)


@pytest.fixture
def coil():
    return CoilParams(resistance=TABLE_R, inductance=TABLE_L,
                      k_t=TABLE_KT, k_emf=TABLE_KEMF)


@pytest.fixture
def modal(mech):
    omega_n, zeta, theta_f = normalize_params(mech)
    return RingdownModal(omega_n, zeta, theta_f)


@pytest.fixture
def stator_geom():
    # 76.2 x 12.7 x 12.7 mm N45 block, residual flux density 1.35 T
    return MagnetGeometry(length=76.2e-3, width=12.7e-3, thickness=12.7e-3, b_r=1.35)


def rms(x):
    return float(np.sqrt(np.mean(np.square(x))))
