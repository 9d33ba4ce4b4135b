from django.contrib import admin
from django.http import HttpResponse
import csv

from .harness import CSV_COLUMNS
from .models import PowerRecord

admin.site.site_header = "Complementary Sketching Admin"
admin.site.site_title = "CompSketch Admin Portal"
admin.site.index_title = "Power records"


def export_to_csv(modeladmin, request, queryset):
    """Export selected power records with the power CSV column order"""
    response = HttpResponse(content_type='text/csv')
    response['Content-Disposition'] = 'attachment; filename="power_records.csv"'

    writer = csv.writer(response, lineterminator='\n')
    writer.writerow(CSV_COLUMNS)
    for record in queryset:
        writer.writerow(record.to_row().as_csv_row())
    return response
export_to_csv.short_description = "Export selected to CSV"


@admin.register(PowerRecord)
class PowerRecordAdmin(admin.ModelAdmin):
    list_display = ('label', 'method', 'mode', 'n1', 'n2', 'p', 'k', 'rho', 'power', 'mc_se', 'created_at')
    list_filter = ('method', 'mode', 'design', 'noise', 'created_at')
    search_fields = ('label', 'method', 'design', 'noise')
    readonly_fields = ('created_at',)

    fieldsets = (
        ('Scenario', {
            'fields': ('label', 'n1', 'n2', 'p', 'k', 'rho', 'sigma', 'design', 'noise', 'seed')
        }),
        ('Result', {
            'fields': ('method', 'mode', 'nu', 'reps', 'power', 'mc_se', 'wall_time_ms', 'created_at')
        }),
    )

    actions = [export_to_csv]
