from .audit import AuditReport, FoliationSample, audit_foliation
from .belrobinson import bel_robinson, energy_identity_closure, flux_sigma_density, k_decompose
from .charts import ChartPoint, ChartTag, EllipsoidSection, SdSGeometry, SdSParams, ellipsoid_section
from .decay import DecayProblem, GronwallBound, gronwall_bound, verify_decay
from .nullframe import FoliationChange, StructureCoefficients, structure_coefficients, transform_foliation
from .profiles import Config, ProfileLoader
from .weyl import EMPair, Weyl4, WeylNull, em_decompose, null_decompose

__all__ = [
    "AuditReport",
    "FoliationSample",
    "audit_foliation",
    "bel_robinson",
    "energy_identity_closure",
    "flux_sigma_density",
    "k_decompose",
    "ChartPoint",
    "ChartTag",
    "EllipsoidSection",
    "SdSGeometry",
    "SdSParams",
    "ellipsoid_section",
    "DecayProblem",
    "GronwallBound",
    "gronwall_bound",
    "verify_decay",
    "FoliationChange",
    "StructureCoefficients",
    "structure_coefficients",
    "transform_foliation",
    "Config",
    "ProfileLoader",
    "EMPair",
    "Weyl4",
    "WeylNull",
    "em_decompose",
    "null_decompose",
]
