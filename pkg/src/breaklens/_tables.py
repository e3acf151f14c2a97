"""Published critical-value tables used by the unit-root tests.

MacKinnon response-surface coefficients
---------------------------------------
Approximate asymptotic p-values for Dickey-Fuller t statistics, single
series (N = 1). Coefficients are from MacKinnon, J.G. (1994) "Approximate
asymptotic distribution functions for unit-root and cointegration tests",
JBES 12(2), 167-176, as updated in MacKinnon (2010) Queen's University
working paper 1227. The scaling of the higher-order terms follows the
convention in the original tables (small-p cubic term x 1e-2, large-p
terms x 1e-1/1e-1/1e-2).

Zivot-Andrews quantiles
-----------------------
Quantiles (percent, statistic) of the Zivot-Andrews minimum-t statistic,
from a Monte Carlo with 100,000 replications of 2,000-observation random
walks (as distributed with the ZAUnitRoot reference implementation and
statsmodels). Used for piecewise-linear p-value interpolation.
"""

from __future__ import annotations

import numpy as np

# regression -> (tau_star, tau_min, tau_max)
MACKINNON_BOUNDS = {
    "n": (-1.04, -19.04, np.inf),
    "c": (-1.61, -18.83, 2.74),
    "ct": (-2.89, -16.18, 0.7),
}

MACKINNON_SMALLP = {
    "n": np.array([0.6344, 1.2378, 3.2496e-2]),
    "c": np.array([2.1659, 1.4412, 3.8269e-2]),
    "ct": np.array([3.2512, 1.6047, 4.9588e-2]),
}

MACKINNON_LARGEP = {
    "n": np.array([0.4797, 9.3557e-1, -0.6999e-1, 3.3066e-2]),
    "c": np.array([1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2]),
    "ct": np.array([2.5261, 6.1654e-1, -3.7956e-1, -6.0285e-2]),
}

# (percent, statistic) pairs
ZA_QUANTILES = {
    "c": np.array([
        (0.001, -6.78442), (0.100, -5.83192), (0.200, -5.68139),
        (0.300, -5.58461), (0.400, -5.51308), (0.500, -5.45043),
        (0.600, -5.39924), (0.700, -5.36023), (0.800, -5.33219),
        (0.900, -5.30294), (1.000, -5.27644), (2.500, -5.03340),
        (5.000, -4.81067), (7.500, -4.67636), (10.000, -4.56618),
        (12.500, -4.48130), (15.000, -4.40507), (17.500, -4.33947),
        (20.000, -4.28155), (22.500, -4.22683), (25.000, -4.17830),
        (27.500, -4.13101), (30.000, -4.08586), (32.500, -4.04455),
        (35.000, -4.00380), (37.500, -3.96144), (40.000, -3.92078),
        (42.500, -3.88178), (45.000, -3.84503), (47.500, -3.80549),
        (50.000, -3.77031), (52.500, -3.73209), (55.000, -3.69600),
        (57.500, -3.65985), (60.000, -3.62126), (65.000, -3.54580),
        (70.000, -3.46848), (75.000, -3.38533), (80.000, -3.29112),
        (85.000, -3.17832), (90.000, -3.04165), (92.500, -2.95146),
        (95.000, -2.83179), (96.000, -2.76465), (97.000, -2.68624),
        (98.000, -2.57884), (99.000, -2.40044), (99.900, -1.88932),
    ]),
    "t": np.array([
        (0.001, -83.9094), (0.100, -13.8837), (0.200, -9.13205),
        (0.300, -6.32564), (0.400, -5.60803), (0.500, -5.38794),
        (0.600, -5.26585), (0.700, -5.18734), (0.800, -5.12756),
        (0.900, -5.07984), (1.000, -5.03421), (2.500, -4.65634),
        (5.000, -4.40580), (7.500, -4.25214), (10.000, -4.13678),
        (12.500, -4.03765), (15.000, -3.95185), (17.500, -3.87945),
        (20.000, -3.81295), (22.500, -3.75273), (25.000, -3.69836),
        (27.500, -3.64785), (30.000, -3.59819), (32.500, -3.55146),
        (35.000, -3.50522), (37.500, -3.45987), (40.000, -3.41672),
        (42.500, -3.37465), (45.000, -3.33394), (47.500, -3.29393),
        (50.000, -3.25316), (52.500, -3.21244), (55.000, -3.17124),
        (57.500, -3.13211), (60.000, -3.09204), (65.000, -3.01135),
        (70.000, -2.92897), (75.000, -2.83614), (80.000, -2.73893),
        (85.000, -2.62840), (90.000, -2.49611), (92.500, -2.41337),
        (95.000, -2.30820), (96.000, -2.25797), (97.000, -2.19648),
        (98.000, -2.11320), (99.000, -1.99138), (99.900, -1.67466),
    ]),
    "ct": np.array([
        (0.001, -38.17800), (0.100, -6.43107), (0.200, -6.07279),
        (0.300, -5.95496), (0.400, -5.86254), (0.500, -5.77081),
        (0.600, -5.72541), (0.700, -5.68406), (0.800, -5.65163),
        (0.900, -5.60419), (1.000, -5.57556), (2.500, -5.29704),
        (5.000, -5.07332), (7.500, -4.93003), (10.000, -4.82668),
        (12.500, -4.73711), (15.000, -4.66020), (17.500, -4.58970),
        (20.000, -4.52855), (22.500, -4.47100), (25.000, -4.42011),
        (27.500, -4.37387), (30.000, -4.32705), (32.500, -4.28126),
        (35.000, -4.23793), (37.500, -4.19822), (40.000, -4.15800),
        (42.500, -4.11946), (45.000, -4.08064), (47.500, -4.04286),
        (50.000, -4.00489), (52.500, -3.96837), (55.000, -3.93200),
        (57.500, -3.89496), (60.000, -3.85577), (65.000, -3.77795),
        (70.000, -3.69794), (75.000, -3.61852), (80.000, -3.52485),
        (85.000, -3.41665), (90.000, -3.28527), (92.500, -3.19724),
        (95.000, -3.08769), (96.000, -3.03088), (97.000, -2.96091),
        (98.000, -2.85581), (99.000, -2.71015), (99.900, -2.28767),
    ]),
}

# Brown-Durbin-Evans style boundary constants for the OLS-residual CUSUM
CUSUM_CRITICAL = {0.01: 1.63, 0.05: 1.36, 0.10: 1.14}

# Bai-Perron sup F(l+1 | l) asymptotic critical values, trimming 0.15, one
# break-affected regressor (mean shift). Row l = 0..4, keyed by level.
BAI_PERRON_SUPF = {
    0.10: (7.04, 8.51, 9.41, 10.04, 10.58),
    0.05: (8.58, 10.13, 11.14, 11.83, 12.25),
    0.01: (12.29, 13.89, 14.80, 15.28, 15.76),
}
