from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='PowerRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('label', models.CharField(blank=True, max_length=100)),
                ('n1', models.PositiveIntegerField()),
                ('n2', models.PositiveIntegerField()),
                ('p', models.PositiveIntegerField()),
                ('k', models.PositiveIntegerField()),
                ('rho', models.FloatField()),
                ('sigma', models.FloatField()),
                ('design', models.CharField(max_length=20)),
                ('noise', models.CharField(max_length=20)),
                ('method', models.CharField(choices=[('sparse', 'Sparse sketch test'), ('dense', 'Dense sketch test'), ('lrt', 'Likelihood ratio test')], max_length=10)),
                ('mode', models.CharField(choices=[('simulation', 'Simulation thresholds'), ('theory', 'Theory thresholds'), ('classical', 'Classical F-test')], max_length=20)),
                ('nu', models.FloatField(blank=True, null=True)),
                ('reps', models.PositiveIntegerField()),
                ('power', models.FloatField()),
                ('mc_se', models.FloatField()),
                ('seed', models.CharField(max_length=24)),
                ('wall_time_ms', models.PositiveIntegerField(default=0)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at'],
                'indexes': [models.Index(fields=['method', 'mode'], name='powerrecord_method_mode_idx')],
            },
        ),
    ]
