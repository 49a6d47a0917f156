"""
Integration tests package.
[CTX:PBI-3:3-3:API]
"""
