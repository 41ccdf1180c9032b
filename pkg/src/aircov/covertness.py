"""Detection-theoretic math for the warden: KL divergence, Pinsker bound,
exact minimum detection error probability, Lambert-W roots, and the linear
cap form of the covertness constraint."""

from dataclasses import dataclass
import math

_INV_E = math.exp(-1.0)


def lambert_w(branch, z):
    """Real Lambert-W: solve w * exp(w) = z on the requested branch.

    branch "principal" needs z >= -1/e and returns w >= -1; branch
    "minus_one" needs -1/e <= z < 0 and returns w <= -1. Halley iteration
    from a branch-specific seed; absolute residual <= 1e-12.
    """
    z = float(z)
    if branch == "principal":
        if z < -_INV_E - 1e-15:
            raise ValueError("principal branch needs z >= -1/e")
    elif branch == "minus_one":
        if z < -_INV_E - 1e-15 or z >= 0.0:
            raise ValueError("minus-one branch needs -1/e <= z < 0")
    else:
        raise ValueError(f"unknown branch {branch!r}")

    if z == 0.0:
        return 0.0
    q = 2.0 * (1.0 + math.e * z)
    if q < 1e-30:
        return -1.0    # branch point
    p = math.sqrt(max(q, 0.0))

    if branch == "principal":
        if z < -0.25:
            w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
        elif z < 0.3:
            w = z * (1.0 - z * (1.0 - 1.5 * z))
        elif z <= math.e:
            w = math.log(1.0 + z)
        else:
            lz = math.log(z)
            w = lz - math.log(lz)
    else:
        if z < -0.25:
            w = -1.0 - p - p * p / 3.0 - 11.0 / 72.0 * p ** 3
        else:
            l1 = math.log(-z)
            l2 = math.log(-l1)
            w = l1 - l2 + l2 / l1

    for _ in range(60):
        ew = math.exp(w)
        r = w * ew - z
        if r == 0.0:
            break
        # Halley step
        denom = ew * (w + 1.0) - (w + 2.0) * r / (2.0 * w + 2.0)
        step = r / denom
        w -= step
        if abs(step) <= 1e-16 * max(1.0, abs(w)):
            break
    if abs(w * math.exp(w) - z) > 1e-12 * max(1.0, abs(z)):
        raise ValueError(f"lambert_w failed to converge for branch={branch}, z={z}")
    return w


@dataclass(frozen=True)
class CovertBounds:
    """Roots x1 < 1 < x2 of ln x + 1/x = 1 + 2 epsilon^2 and the cap factor
    x2 - 1 that bounds the warden-side power ratio."""

    epsilon: float
    x1: float
    x2: float
    cap_factor: float


def covert_roots(epsilon):
    """Both roots of ln x + 1/x = 1 + 2 epsilon^2 via Lambert-W closed forms."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    c = 1.0 + 2.0 * epsilon ** 2
    z = -math.exp(-c)
    x1 = math.exp(lambert_w("minus_one", z) + c)
    x2 = math.exp(lambert_w("principal", z) + c)
    for x in (x1, x2):
        if abs(math.log(x) + 1.0 / x - c) > 1e-9:
            raise ValueError("covert_roots residual check failed")
    if not (0.0 < x1 <= 1.0 <= x2):
        raise ValueError("covert_roots ordering check failed")
    return CovertBounds(epsilon=float(epsilon), x1=x1, x2=x2, cap_factor=x2 - 1.0)


def kld(sigma0, sigma1):
    """KL divergence between CN(0, sigma0) and CN(0, sigma1) observations:
    ln(sigma1/sigma0) + sigma0/sigma1 - 1."""
    if sigma0 <= 0 or sigma1 <= 0:
        raise ValueError("variances must be positive")
    return math.log(sigma1 / sigma0) + sigma0 / sigma1 - 1.0


def dep_pinsker_bound(kld_value):
    """Pinsker lower bound on the detection error probability, clamped at 0."""
    if kld_value < 0:
        raise ValueError("KL divergence cannot be negative")
    return max(0.0, 1.0 - math.sqrt(kld_value / 2.0))


def exact_min_dep(sigma0, sigma1):
    """Minimum false-alarm plus miss-detection probability over all detectors.

    The warden observes |y|^2, exponential with mean sigma_i under hypothesis
    i, so the optimal likelihood-ratio test thresholds at
    tau = sigma0 sigma1 ln(max/min) / |sigma1 - sigma0| and the minimum error
    sum is 1 - (exp(-tau/max) - exp(-tau/min)).
    """
    if sigma0 <= 0 or sigma1 <= 0:
        raise ValueError("variances must be positive")
    if sigma0 == sigma1:
        return 1.0
    lo, hi = min(sigma0, sigma1), max(sigma0, sigma1)
    tau = sigma0 * sigma1 / (hi - lo) * math.log(hi / lo)
    return 1.0 - (math.exp(-tau / hi) - math.exp(-tau / lo))


@dataclass(frozen=True)
class DetectionReport:
    sigma0: float
    sigma1: float
    kld: float
    pinsker_lower_bound: float
    exact_min_dep: float


def detection_report(sigma0, sigma1):
    """Bundle all detection metrics for one (sigma0, sigma1) pair."""
    d = kld(sigma0, sigma1)
    return DetectionReport(sigma0=sigma0, sigma1=sigma1, kld=d,
                           pinsker_lower_bound=dep_pinsker_bound(d),
                           exact_min_dep=exact_min_dep(sigma0, sigma1))


def covert_feasible(d, e, bounds, sigma2_w):
    """Check the linear form of the covertness constraint,
    d <= (x2 - 1)(e + sigma2_w), with a small solver-feasibility slack."""
    return d <= bounds.cap_factor * (e + sigma2_w) + 1e-9
