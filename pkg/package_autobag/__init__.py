name = "package_autobag"