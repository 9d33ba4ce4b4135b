from django.contrib import admin
from django.urls import path

# Saved power records are browsed and exported through the admin.
urlpatterns = [
    path('admin/', admin.site.urls),
]
