from django.apps import AppConfig


class SketchTestingConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'sketch_testing'
    verbose_name = 'Complementary sketching'
