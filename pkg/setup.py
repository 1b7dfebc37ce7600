"""
Setup script for installing the RoI point cloud codec package.
"""

from setuptools import setup, find_packages

setup(
    name="roi_pcc",
    version="0.1.0",
    description="Region-of-interest compression of LiDAR point cloud sequences",
    author="Your Name",
    author_email="your.email@example.com",
    packages=find_packages(exclude=["tests"]),
    install_requires=[
        "numpy>=1.21.0",
        "numba>=0.56.0",
        "pandas>=1.3.0",
        "tqdm>=4.60.0",
        "PyYAML>=5.4",
        "pillow>=9.0.0",
        "python-dotenv>=0.15.0",
    ],
    entry_points={
        "console_scripts": [
            "roi-pcc=src.main:main",
        ],
    },
    python_requires=">=3.8",
)
