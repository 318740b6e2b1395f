from setuptools import setup

setup(
    name="wk-stationarity",
    setup_requires="setupmeta",
    versioning="dev",
    author="wk-stationarity developers",
    keywords="stationarity, wiener-khinchin, power spectral density, time series",
    python_requires=">=3.9",
    entry_points={
        "console_scripts": [
            "wk-stationarity = wk_stationarity.__main__:main",
        ],
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "Operating System :: MacOS :: MacOS X",
        "Operating System :: POSIX",
        "Operating System :: Unix",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Programming Language :: Python :: Implementation :: CPython",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Topic :: Office/Business :: Financial",
        "Topic :: Utilities",
    ],
)
