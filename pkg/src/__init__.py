"""
Initialize package modules
"""
from src.families.families import FamilySpec, make_family, preset_family
from src.flow.flow import FlowConfig, run_to_equilibrium
from src.geometry.discrete import fundamental_forms_mesh
from src.geometry.forms import fundamental_forms_param
from src.verifier.verifier import SuiteOptions, run_suite
