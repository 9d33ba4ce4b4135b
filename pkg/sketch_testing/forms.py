from django import forms
from django.core.exceptions import ValidationError

from .procedures import METHODS, MODES
from .simgen import DESIGN_KINDS, NOISE_KINDS, Scenario


class ScenarioForm(forms.Form):
    """Validates a scenario JSON document before it becomes a Scenario"""
    n1 = forms.IntegerField()
    n2 = forms.IntegerField()
    p = forms.IntegerField()
    k = forms.IntegerField()
    rho = forms.FloatField()
    sigma = forms.FloatField(required=False)
    design_kind = forms.ChoiceField(choices=[(kind, kind) for kind in DESIGN_KINDS], required=False)
    noise_kind = forms.ChoiceField(choices=[(kind, kind) for kind in NOISE_KINDS], required=False)
    seed = forms.IntegerField(required=False)
    ar_base = forms.FloatField(required=False)
    random_support = forms.BooleanField(required=False)
    fixed_truth = forms.BooleanField(required=False)

    def _positive(self, name):
        value = self.cleaned_data.get(name)
        if value is not None and value < 1:
            raise ValidationError(f'{name} must be a positive integer.')
        return value

    def clean_n1(self):
        return self._positive('n1')

    def clean_n2(self):
        return self._positive('n2')

    def clean_p(self):
        return self._positive('p')

    def clean_k(self):
        return self._positive('k')

    def clean_rho(self):
        rho = self.cleaned_data.get('rho')
        if rho is not None and rho < 0:
            raise ValidationError('rho must be non-negative.')
        return rho

    def clean_sigma(self):
        sigma = self.cleaned_data.get('sigma')
        if sigma is not None and sigma < 0:
            raise ValidationError('sigma must be non-negative.')
        return sigma

    def clean_seed(self):
        seed = self.cleaned_data.get('seed')
        if seed is not None and seed < 0:
            raise ValidationError('seed must be non-negative.')
        return seed

    def clean_ar_base(self):
        ar_base = self.cleaned_data.get('ar_base')
        if ar_base is not None and not 0 < ar_base < 1:
            raise ValidationError('ar_base must lie strictly between 0 and 1.')
        return ar_base

    def clean(self):
        cleaned_data = super().clean()
        unknown = set(self.data) - set(self.fields)
        if unknown:
            raise ValidationError(f'Unknown scenario fields: {", ".join(sorted(unknown))}.')

        n1 = cleaned_data.get('n1')
        n2 = cleaned_data.get('n2')
        p = cleaned_data.get('p')
        k = cleaned_data.get('k')
        if p and k and k > p:
            raise ValidationError(f'Sparsity k = {k} exceeds p = {p}.')
        if n1 and n2 and p:
            if n1 + n2 <= p:
                raise ValidationError(f'n1 + n2 = {n1 + n2} must exceed p = {p}.')
            if cleaned_data.get('design_kind') == 'anova' and (n1 % p or n2 % p):
                raise ValidationError(
                    f'The ANOVA design needs p = {p} to divide n1 = {n1} and n2 = {n2}.'
                )
        return cleaned_data

    def to_scenario(self, **overrides):
        values = {
            name: value for name, value in self.cleaned_data.items()
            if value is not None and value != ''
        }
        values.update(overrides)
        return Scenario(**values)


class TestConfigForm(forms.Form):
    """Tuning flags shared by every compsketch subcommand"""
    mode = forms.ChoiceField(choices=[(mode, mode) for mode in MODES], required=False)
    epsilon = forms.FloatField(required=False)
    sigma = forms.FloatField(required=False)
    omega = forms.FloatField(required=False)
    k = forms.IntegerField(required=False)
    level = forms.FloatField(required=False)
    split = forms.FloatField(required=False)
    seed = forms.IntegerField(required=False)
    reps = forms.IntegerField(required=False)
    methods = forms.MultipleChoiceField(choices=[(method, method) for method in METHODS], required=False)

    def __init__(self, *args, needs_k=False, **kwargs):
        super().__init__(*args, **kwargs)
        self.needs_k = needs_k

    def clean_epsilon(self):
        epsilon = self.cleaned_data.get('epsilon')
        if epsilon is not None and epsilon <= 0:
            raise ValidationError('epsilon must be positive.')
        return epsilon

    def clean_sigma(self):
        sigma = self.cleaned_data.get('sigma')
        if sigma is not None and sigma <= 0:
            raise ValidationError('sigma must be positive.')
        return sigma

    def clean_omega(self):
        omega = self.cleaned_data.get('omega')
        if omega is not None and omega < 0:
            raise ValidationError('omega must be non-negative.')
        return omega

    def clean_k(self):
        k = self.cleaned_data.get('k')
        if k is not None and k < 1:
            raise ValidationError('k must be a positive integer.')
        return k

    def clean_level(self):
        level = self.cleaned_data.get('level')
        if level is not None and not 0 < level < 1:
            raise ValidationError('level must lie strictly between 0 and 1.')
        return level

    def clean_split(self):
        split = self.cleaned_data.get('split')
        if split is not None and not 0 < split < 1:
            raise ValidationError('split must lie strictly between 0 and 1.')
        return split

    def clean_reps(self):
        reps = self.cleaned_data.get('reps')
        if reps is not None and reps < 1:
            raise ValidationError('reps must be at least 1.')
        return reps

    def clean_seed(self):
        seed = self.cleaned_data.get('seed')
        if seed is not None and seed < 0:
            raise ValidationError('seed must be non-negative.')
        return seed

    def clean(self):
        cleaned_data = super().clean()
        if self.needs_k and cleaned_data.get('mode') == 'theory' and cleaned_data.get('k') is None:
            raise ValidationError('Theory-mode thresholds need the sparsity level k (--k).')
        if cleaned_data.get('sigma') is not None and cleaned_data.get('split') is not None:
            raise ValidationError('--split estimates sigma; it cannot be combined with --sigma.')
        return cleaned_data
