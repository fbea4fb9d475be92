from setuptools import setup, find_packages, Extension
from Cython.Build import cythonize

import numpy as np

compile_args = ['-fopenmp']
link_args = ['-fopenmp']
#compile_args = []
#link_args = []

# Cython module for the exhaustive cost surface, numpy is used when it is missing
fast_ext = Extension(
    "mvglidar.calib._fast_cost",
    ["mvglidar/calib/_fast_cost.pyx"],
    include_dirs=[np.get_include()],
    extra_compile_args=compile_args,
    extra_link_args=link_args,
    optional=True,
    )

setup(
    name='mvglidar',
    version=0.1,

    packages=find_packages(exclude=['tests']),

    ext_modules=cythonize([fast_ext], compiler_directives={'language_level': 3}),

    install_requires=['numpy', 'scipy', 'PyYAML'],
    extras_require={'test': ['pytest']},

    entry_points={
        'console_scripts': ['mvglidar = mvglidar.scripts.cli:main'],
    },

    description="MEMS LiDAR scan simulator and minimum vertical gradient timing self-calibration"
    )
