"""Reference values produced by ``golden_oracle.py`` (mpmath, 40 digits).

Setting: f = indicator(-1, 1), m = 1, lambda = sqrt(2).
"""

FHAT_2LAM = 0.21783961811686412691
XI = 1.4225776075879482923
SIN_SQ_THETA = 0.0029397500601161935243
SIN_THETA = 0.05421946200504200433
SIN_SQ_2THETA = 0.011724431718800961444
FLUCT_P1 = 0.023448863437601922887     # lambda^2 sin^2 2theta
Q11 = 0.99706024993988380648
SIGMA_NORM_SQ = 0.023518000480929548195  # 2 (b - a)^2 sin^2 theta on (-1, 1)

BUMP_F0_UNIT = 0.44399381616807943782
BUMP_FHAT_UNIT = {
    5: -0.00021224991443751581154,
    10: 0.014623086655132708615,
    20: -0.00056190294995295752053,
}

# values quoted alongside the acceptance criteria
STATED_XI = 1.42258
STATED_SIN_SQ_THETA = 0.0029325
