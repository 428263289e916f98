from setuptools import setup

setup(
    name='pvalue_cart',
    version='0.1.0',
    packages=['pvalue_cart', 'pvalue_cart.simlab'],
    python_requires='>=3.8',
    install_requires=[
        'numpy',
        'scipy',
        'pandas',
        'tqdm',
    ],
    extras_require={
        'test': ['pytest'],
    },
    entry_points={
        'console_scripts': ['pvalue-cart=pvalue_cart.cli:main'],
    },
    url='',
    license='',
    author='',
    author_email='',
    description='Regression trees and L2 boosting with p-value based early stopping'
)
