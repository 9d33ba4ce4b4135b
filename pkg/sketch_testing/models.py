from django.db import models

from .harness import CSV_COLUMNS, PowerRow


class PowerRecord(models.Model):
    """One estimated power, saved from `compsketch simulate|phase|compare|misspecify --save`"""
    METHOD_CHOICES = [
        ('sparse', 'Sparse sketch test'),
        ('dense', 'Dense sketch test'),
        ('lrt', 'Likelihood ratio test'),
    ]
    MODE_CHOICES = [
        ('simulation', 'Simulation thresholds'),
        ('theory', 'Theory thresholds'),
        ('classical', 'Classical F-test'),
    ]

    label = models.CharField(max_length=100, blank=True)
    n1 = models.PositiveIntegerField()
    n2 = models.PositiveIntegerField()
    p = models.PositiveIntegerField()
    k = models.PositiveIntegerField()
    rho = models.FloatField()
    sigma = models.FloatField()
    design = models.CharField(max_length=20)
    noise = models.CharField(max_length=20)
    method = models.CharField(max_length=10, choices=METHOD_CHOICES)
    mode = models.CharField(max_length=20, choices=MODE_CHOICES)
    nu = models.FloatField(null=True, blank=True)  # null when sigma = 0
    reps = models.PositiveIntegerField()
    power = models.FloatField()
    mc_se = models.FloatField()
    seed = models.CharField(max_length=24)  # 64-bit seeds overflow a signed integer column
    wall_time_ms = models.PositiveIntegerField(default=0)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-created_at']
        indexes = [
            models.Index(fields=['method', 'mode'], name='powerrecord_method_mode_idx'),
        ]

    def __str__(self):
        return f"{self.method} n1={self.n1} n2={self.n2} p={self.p} rho={self.rho}: {self.power:.3f}"

    @classmethod
    def from_row(cls, row, label=''):
        values = {column: getattr(row, column) for column in CSV_COLUMNS}
        if values['nu'] == float('inf'):
            values['nu'] = None
        values['seed'] = str(values['seed'])
        return cls(label=label, **values)

    def to_row(self):
        values = {column: getattr(self, column) for column in CSV_COLUMNS}
        values['nu'] = float('inf') if self.nu is None else self.nu
        values['seed'] = int(self.seed)
        values['rejections'] = int(round(self.power * self.reps))
        return PowerRow(**values)
