"""Array layouts shared by the compiled and pure-Python collision kernels."""

# packed table, one row per boundary component
KIND_WALL = 0.0
KIND_ARC = 1.0
C_KIND = 0
C_SX = 1  # chain start point
C_SY = 2
C_EX = 3  # chain end point
C_EY = 4
C_LEN = 5
C_P0 = 6  # wall: nx, ny, tx, ty; arc: cx, cy, r, usx, usy, uex, uey
NCOL = 13

# recorded event columns
E_T = 0
E_TAU = 1
E_X = 2
E_Y = 3
E_COMP = 4
E_KAPPA = 5
E_PHI = 6
E_GRAZE = 7
NEV = 8

# per-trajectory summary columns
S_NEVENTS = 0
S_TERM = 1
S_TIME = 2
S_LOGEXP = 3
S_B = 4
S_ARCHITS = 5
S_FIRSTARC = 6
S_NGRAZE = 7
S_SSSUM = 8
S_SSMIN = 9
S_SSGROUPS = 10
S_X = 11
S_Y = 12
S_DX = 13
S_DY = 14
S_COMP = 15
S_PHI = 16
NSUM = 17

# termination codes
T_BOUNCES = 0
T_TIME = 1
T_VERTEX = 2
T_GRAZING = 3
T_ESCAPE = 4
