from .constitutive import neo_hookean_energy, neo_hookean_stress
from .grid import Collider, Grid, default_colliders, g2p, grid_update, p2g
from .simulate import object_observables, particle_materials, simulate
