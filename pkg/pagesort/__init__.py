# Web page categorization: HTML features + 5-5-3 backprop network
__version__ = "1.0.0"
