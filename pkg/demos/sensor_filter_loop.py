"""Output measurements behind the scheduler: the sensor-side filter.

When the sensor sees noisy partial measurements instead of the state, a local
Kalman filter turns the measurement stream into a state estimate, and the
scheduler thresholds that estimate's innovations instead.  This script runs
the filter open-loop on one noisy trajectory and shows the filtered estimate
tracking the hidden state while the covariance settles.
"""

import numpy as np

from macloops import PlantModel, SensorKf, sensor_kf_step


def main(steps=25, seed=4):
    rng = np.random.default_rng(seed)
    plant = PlantModel(A=[[0.95, 0.2], [0.0, 0.85]], B=[[0.0], [1.0]],
                       Rw=0.05 * np.eye(2), R0=np.eye(2))
    kf = SensorKf.initial(C=[[1.0, 0.0]], Rv=[[0.4]],
                          z0_mean=[0.0, 0.0], P0=np.eye(2))

    z = rng.multivariate_normal([0.0, 0.0], np.eye(2))
    u_prev = np.zeros(1)
    print(f"{'k':>3s} {'measured':>9s} {'hidden z1':>9s} {'est z1':>9s} "
          f"{'hidden z2':>9s} {'est z2':>9s} {'tr P':>8s}")
    for k in range(steps):
        m = kf.C @ z + rng.normal(0.0, np.sqrt(0.4), size=1)
        kf = sensor_kf_step(kf, m, u_prev, plant)
        print(f"{k:3d} {m[0]:9.3f} {z[0]:9.3f} {kf.z_filt[0]:9.3f} "
              f"{z[1]:9.3f} {kf.z_filt[1]:9.3f} {np.trace(kf.P_filt):8.4f}")
        u_prev = np.array([-0.4 * kf.z_filt[1]])
        w = rng.multivariate_normal([0.0, 0.0], 0.05 * np.eye(2))
        z = plant.A @ z + plant.B @ u_prev + w
    print("\nthe filtered estimate is what a scheduler would threshold when "
          "raw states are not observable")


if __name__ == "__main__":
    main()
