from setuptools import find_packages, setup

from gridfreq import __version__


with open('README.md', encoding='utf-8') as readme:
    long_description = readme.read()

with open('requirements.txt', encoding='utf-8') as requirements:
    install_requires = [line.split('#')[0].strip() for line in requirements if line.split('#')[0].strip()]

setup(
    name='gridfreq',
    version=__version__,
    description='Phasor domain frequency response of synchronous generator and grid-forming inverter fleets',
    long_description=long_description,
    long_description_content_type='text/markdown',
    author='The gridfreq authors',
    license='GPL-3.0-or-later',
    packages=find_packages(exclude=['tests', 'tests.*']),
    data_files=[('share/gridfreq/data/{0}'.format(name), ['data/{0}/scenario.yml'.format(name)])
                for name in ('single_sg', 'single_gfm', 'ieee9', 'ieee39')],
    python_requires='>=3.9',
    install_requires=install_requires,
    entry_points={
        'console_scripts': [
            'gridfreq = gridfreq.cli:main',
        ],
    },
    keywords=['power systems', 'frequency', 'inertia', 'grid-forming', 'simulation'],
    classifiers=[
        'License :: OSI Approved :: GNU General Public License v3 or later (GPLv3+)',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering',
    ],
)
