from setuptools import find_packages, setup

setup(
    name='hilbert',
    version='0.1.0',
    description='Discover polynomial laws from axioms and data, with proof certificates.',
    packages=find_packages(include=['hilbert', 'hilbert.*']),
    python_requires='>=3.8',
    install_requires=['numpy>=1.22', 'scipy>=1.9', 'pyparsing>=3.0', 'pandas>=1.4'],
    extras_require={'test': ['sympy>=1.10']},
    entry_points={'console_scripts': ['hilbert=hilbert.main:main']},
)
