from setuptools import setup, find_namespace_packages
from pathlib import Path

includes = [
    "package_autobag",
    "package_autobag.*",
]

this_directory = Path(__file__).parent
long_description = (this_directory / "package_autobag" / "README.md").read_text()

setup(
    name='autobag-sim',
    package_dir={'package_autobag': 'package_autobag'},
    packages=find_namespace_packages(
        include=includes
    ),
    description='Bag opening and object insertion policies with a 2D bag simulator and trial harness',
    install_requires=[
        'numpy',
        'scipy',
        'Pillow',
        'jsonschema',
    ],
    entry_points={
        'console_scripts': [
            'autobag=package_autobag.main:main',
        ],
    },
    long_description=long_description,
    long_description_content_type='text/markdown',
    include_package_data=True,
    version='0.1.0',
)
