# Solenoid Green Functions Package
__version__ = "1.0.0"
