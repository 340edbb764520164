from setuptools import setup, find_packages

setup(
    name="seqmon",
    version="0.1.0",
    author="You",
    author_email="your.email@example.com",
    description="Sequential change-point monitoring of regressions with an autoregressive term",
    long_description="",
    packages=find_packages('src'),
    package_dir={'': 'src'},
    install_requires=[
        'numpy',
        'scipy',
        'pandas',
        'rich',
        'tomli; python_version < "3.11"',
    ],
    extras_require={
        'test': ['pytest', 'hypothesis', 'statsmodels'],
    },
    entry_points={
        'console_scripts': ['seqmon = seqmon.cli:main'],
    },
    python_requires='>=3.10',
)
