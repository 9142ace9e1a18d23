def f(x):
    if x and y:
        return 1
    return 2
