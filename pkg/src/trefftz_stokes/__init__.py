"""Interior-penalty DG and embedded Trefftz-DG discretizations of 2D Stokes flow."""

__version__ = "0.1.0"
