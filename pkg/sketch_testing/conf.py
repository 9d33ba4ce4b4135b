from django.conf import settings

DEFAULTS = {
    'THREADS': 1,
    'DEFAULT_MODE': 'simulation',
    'DEFAULT_EPSILON': 0.5,
    'DEFAULT_REPS': 100,
    'LRT_LEVEL': 0.05,
    'FAILURE_BUDGET': 0.01,
    'RANK_CUTOFF': 1e-10,
    'MAX_REDRAWS': 3,
    'VARIANCE_FLOOR': 1e-8,
    'SIGMA_ESTIMATOR': 'sketch',
}


def get_setting(name):
    """Look up ``settings.COMPSKETCH[name]``, falling back to DEFAULTS."""
    overrides = {}
    if settings.configured:
        overrides = getattr(settings, 'COMPSKETCH', {})
    if name in overrides:
        return overrides[name]
    return DEFAULTS[name]
