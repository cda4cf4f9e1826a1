"""capflow: eigenvalues of -Delta + c under shrinking Dirichlet regions.

P1 finite elements on fitted simplicial meshes, constrained generalized
eigensolves, Sobolev/Newtonian capacitary potentials and the experiment
pipelines that verify the perturbation asymptotics numerically.
"""

__version__ = "0.1.0"
