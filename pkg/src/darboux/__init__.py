"""
Darboux package: dressing transformation and the explicit homoclinic family
"""
