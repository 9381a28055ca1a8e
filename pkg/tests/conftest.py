from hypothesis import settings

# first calls into numba kernels pay the compile cost
settings.register_profile("nlab", deadline=None)
settings.load_profile("nlab")
