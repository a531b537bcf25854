from django.apps import AppConfig


class FellerLdpConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'feller_ldp'
    verbose_name = 'Small-time large deviations for the Feller/Heston system'
