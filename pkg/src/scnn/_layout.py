"""Index layout of the arrays shared between the engine and its kernels."""

N_ROWS = 128
N_COLS = 64
BG_ROW = 127

# presyn group table, shape (PG_FIELDS, 8)
PG_U = 0
PG_ALPHA = 1
PG_TAU_U = 2
PG_TAU_R = 3
PG_TAU_PSC = 4
PG_GAIN = 5
PG_PH_U = 6
PG_PH_R = 7
PG_PH_PSC = 8
PG_FIELDS = 9

# neuron group table, shape (NG_FIELDS, 4)
NG_THRESH = 0
NG_RESET = 1
NG_TAU_M = 2
NG_PH_M = 3
NG_FIELDS = 4

# scalar register file
P_G_RAW = 0
P_VBG = 1
P_VSAT = 2
P_VRAIL = 3
P_PLASTIC = 4
P_THETA_V = 5
P_A_UP = 6
P_B_DOWN = 7
P_THETA_X = 8
P_DRIFT_UP = 9
P_DRIFT_DOWN = 10
P_RESID_SHIFT = 11
P_FIELDS = 12
