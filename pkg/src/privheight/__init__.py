"""Height estimation from anthropometric measurement ratios.

Kernel support-vector regression with privileged information: plain
epsilon-SVR, epsilon-SVR+ (two correcting functions over the privileged
space), and the PIP pipeline that predicts selected privileged ratios at
test time and regresses height on the augmented feature vector.
"""

__version__ = "0.1.0"
