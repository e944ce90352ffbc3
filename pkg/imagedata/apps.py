from django.apps import AppConfig

class ImagedataConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'imagedata'
